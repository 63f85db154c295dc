#pragma once

#include <random>

#include "plastlab/tensor.hpp"

// Shared randomness helpers for the test binaries. Seeds are fixed so test
// runs are reproducible.

namespace plastlab::testing {

inline std::mt19937& rng() {
    static std::mt19937 gen(0x5eed1234u);
    return gen;
}

inline double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

template <int N>
Vec<N> random_vec(double scale = 1.0) {
    Vec<N> v;
    for (int i = 0; i < N; ++i) v[i] = uniform(-scale, scale);
    return v;
}

template <int N>
Vec<N> random_unit_vec() {
    std::normal_distribution<double> d(0.0, 1.0);
    Vec<N> v;
    double n = 0.0;
    do {
        for (int i = 0; i < N; ++i) v[i] = d(rng());
        n = norm(v);
    } while (n < 1e-8);
    return (1.0 / n) * v;
}

template <int N>
SymMat<N> random_sym(double scale = 1.0) {
    SymMat<N> m;
    for (int k = 0; k < SymMat<N>::Size; ++k) m.a[k] = uniform(-scale, scale);
    return m;
}

}  // namespace plastlab::testing
