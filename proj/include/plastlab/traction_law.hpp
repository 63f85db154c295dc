#pragma once

#include "plastlab/elasticity_set.hpp"
#include "plastlab/tensor.hpp"

// Operations on the boundary trace set C(nu) = { -tau nu : tau in K } and on
// the relaxed boundary potential
//
//   psi(z) = inf_w { (s/2)|w|^2 + H((w - z) (.) nu) }
//          = max_{xi in C(nu)} { xi . z - |xi|^2 / (2 s) },
//
// whose gradient is the Euclidean projection P_C(s z). Scalar boundary
// weights make the weighted and Euclidean projections onto C coincide, so
// every projection below is Euclidean.

namespace plastlab {

// Closed forms exist for Ball (an ellipsoid with semi-axis r along nu and
// r/sqrt(2) tangentially) and DeviatoricCylinder (a slab of tangential radius
// k/sqrt(2), unbounded along nu). Halfspace sets use a projected-gradient
// iteration on the matrix lift min_{tau in K} |y + tau nu|^2.
template <int N>
Vec<N> project_minus_knu(const ElasticitySet<N>& set, const Vec<N>& nu, double weight,
                         const Vec<N>& y);

// Generic iterative path (works for every set kind); the dispatcher above
// prefers closed forms, this one is kept callable for cross-validation.
template <int N>
Vec<N> project_minus_knu_lift(const ElasticitySet<N>& set, const Vec<N>& nu, const Vec<N>& y);

template <int N>
bool minus_knu_membership(const ElasticitySet<N>& set, const Vec<N>& nu, const Vec<N>& z,
                          double band = 1e-9);

template <int N>
double psi_eval(const ElasticitySet<N>& set, const Vec<N>& nu, double weight,
                const Vec<N>& z);

template <int N>
Vec<N> psi_grad(const ElasticitySet<N>& set, const Vec<N>& nu, double weight,
                const Vec<N>& z);

// Moreau regularization H_mu(p) = inf_q { H(q) + mu |p - q| }, evaluated as
// the support function of K intersected with the ball of radius mu.
template <int N>
double moreau_yosida_H(const ElasticitySet<N>& set, double mu, const SymMat<N>& p);

// H(-z (.) nu): the dissipation density of a boundary slip rate z.
template <int N>
double boundary_dissipation_density(const ElasticitySet<N>& set, const Vec<N>& nu,
                                    const Vec<N>& z);

template <int N>
struct BoundaryProx {
    Vec<N> v_plus;    // updated boundary velocity
    Vec<N> traction;  // T = -P_C(s v_plus), satisfied exactly
};

// Implicit solve of the boundary node update
//   v+ = v_pred - alpha * xi,   xi = P_C(s v+),
// which reduces to the single projection xi = P_C(v_pred / (alpha + 1/s)).
// weight = +infinity selects the hard-constraint limit xi = P_C(v_pred/alpha).
template <int N>
BoundaryProx<N> boundary_prox(const ElasticitySet<N>& set, const Vec<N>& nu, double weight,
                              double alpha, const Vec<N>& v_pred);

}  // namespace plastlab
