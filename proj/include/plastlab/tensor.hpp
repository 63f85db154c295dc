#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

// Fixed-size symmetric tensor algebra used by every other component.
// Dimension is a compile-time parameter; the solver runs with N = 2,
// the convex-geometry tools are exercised for N = 2 and N = 3.

namespace plastlab {

template <int N>
struct Vec {
    std::array<double, N> x{};

    double& operator[](int i) { return x[i]; }
    double operator[](int i) const { return x[i]; }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < N; ++i) x[i] += o.x[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < N; ++i) x[i] -= o.x[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < N; ++i) x[i] *= s;
        return *this;
    }
};

template <int N> Vec<N> operator+(Vec<N> a, const Vec<N>& b) { return a += b; }
template <int N> Vec<N> operator-(Vec<N> a, const Vec<N>& b) { return a -= b; }
template <int N> Vec<N> operator*(double s, Vec<N> a) { return a *= s; }
template <int N> Vec<N> operator*(Vec<N> a, double s) { return a *= s; }
template <int N> Vec<N> operator-(Vec<N> a) { return a *= -1.0; }

template <int N>
double dot(const Vec<N>& a, const Vec<N>& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <int N>
double norm(const Vec<N>& a) { return std::sqrt(dot(a, a)); }

// Symmetric N x N matrix stored as the row-major upper triangle.
// Layout: N = 2 -> [m00, m01, m11]; N = 3 -> [m00, m01, m02, m11, m12, m22].
template <int N>
struct SymMat {
    static constexpr int Size = N * (N + 1) / 2;
    std::array<double, Size> a{};

    static constexpr int idx(int i, int j) {
        if (i > j) { const int t = i; i = j; j = t; }
        return i * N - i * (i - 1) / 2 + (j - i);
    }

    double operator()(int i, int j) const { return a[idx(i, j)]; }
    void set(int i, int j, double v) { a[idx(i, j)] = v; }

    static SymMat identity() {
        SymMat m;
        for (int i = 0; i < N; ++i) m.a[idx(i, i)] = 1.0;
        return m;
    }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < N; ++i) t += a[idx(i, i)];
        return t;
    }

    SymMat& operator+=(const SymMat& o) {
        for (int k = 0; k < Size; ++k) a[k] += o.a[k];
        return *this;
    }
    SymMat& operator-=(const SymMat& o) {
        for (int k = 0; k < Size; ++k) a[k] -= o.a[k];
        return *this;
    }
    SymMat& operator*=(double s) {
        for (int k = 0; k < Size; ++k) a[k] *= s;
        return *this;
    }
};

template <int N> SymMat<N> operator+(SymMat<N> a, const SymMat<N>& b) { return a += b; }
template <int N> SymMat<N> operator-(SymMat<N> a, const SymMat<N>& b) { return a -= b; }
template <int N> SymMat<N> operator*(double s, SymMat<N> a) { return a *= s; }
template <int N> SymMat<N> operator*(SymMat<N> a, double s) { return a *= s; }
template <int N> SymMat<N> operator-(SymMat<N> a) { return a *= -1.0; }

// Frobenius inner product; off-diagonal entries count twice.
template <int N>
double ddot(const SymMat<N>& A, const SymMat<N>& B) {
    double s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) {
            const double w = (i == j) ? 1.0 : 2.0;
            s += w * A(i, j) * B(i, j);
        }
    return s;
}

template <int N>
double norm(const SymMat<N>& A) { return std::sqrt(ddot(A, A)); }

template <int N>
Vec<N> apply(const SymMat<N>& A, const Vec<N>& v) {
    Vec<N> r;
    for (int i = 0; i < N; ++i) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += A(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

// Symmetrized tensor product (a (x) b + b (x) a) / 2.
template <int N>
SymMat<N> sym_outer(const Vec<N>& a, const Vec<N>& b) {
    SymMat<N> m;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j)
            m.set(i, j, 0.5 * (a[i] * b[j] + a[j] * b[i]));
    return m;
}

template <int N>
SymMat<N> outer(const Vec<N>& a) {
    SymMat<N> m;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j)
            m.set(i, j, a[i] * a[j]);
    return m;
}

template <int N>
struct DevSplit {
    SymMat<N> dev;
    double mean;  // trace / N
};

template <int N>
DevSplit<N> dev_split(const SymMat<N>& A) {
    const double mean = A.trace() / N;
    SymMat<N> d = A;
    for (int i = 0; i < N; ++i) d.set(i, i, d(i, i) - mean);
    return {d, mean};
}

// Isotropic elastic moduli. Acts as multiplication by (N*lambda + 2*mu) on
// spherical tensors and by 2*mu on deviatoric ones.
struct Hooke {
    double lambda = 1.0;
    double mu = 1.0;
};

template <int N>
void validate_hooke(const Hooke& h) {
    if (!(h.mu > 0.0))
        throw std::invalid_argument("hooke: mu must be positive");
    if (!(N * h.lambda + 2.0 * h.mu > 0.0))
        throw std::invalid_argument("hooke: N*lambda + 2*mu must be positive");
}

template <int N>
SymMat<N> hooke_apply(const Hooke& h, const SymMat<N>& e) {
    SymMat<N> s = 2.0 * h.mu * e;
    const double lt = h.lambda * e.trace();
    for (int i = 0; i < N; ++i) s.set(i, i, s(i, i) + lt);
    return s;
}

template <int N>
SymMat<N> hooke_inverse(const Hooke& h, const SymMat<N>& s) {
    SymMat<N> e = (1.0 / (2.0 * h.mu)) * s;
    const double c = h.lambda * s.trace() / (2.0 * h.mu * (N * h.lambda + 2.0 * h.mu));
    for (int i = 0; i < N; ++i) e.set(i, i, e(i, i) - c);
    return e;
}

// Elastic energy density Q(e) = (lambda/2) tr(e)^2 + mu |e|^2 = (1/2) Ae:e.
template <int N>
double quadratic_Q(const Hooke& h, const SymMat<N>& e) {
    const double t = e.trace();
    return 0.5 * h.lambda * t * t + h.mu * ddot(e, e);
}

template <int N>
double hooke_alpha(const Hooke& h) {
    return std::min(2.0 * h.mu, N * h.lambda + 2.0 * h.mu);
}

template <int N>
double hooke_beta(const Hooke& h) {
    return std::max(2.0 * h.mu, N * h.lambda + 2.0 * h.mu);
}

}  // namespace plastlab
