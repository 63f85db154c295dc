#pragma once

#include <functional>
#include <vector>

#include "plastlab/elasticity_set.hpp"
#include "plastlab/grid.hpp"
#include "plastlab/operators.hpp"
#include "plastlab/tensor.hpp"

namespace plastlab {

// Initial fields of a simulation. The additive decomposition
// sym_gradient(u) = e + p and the Hooke relation sigma = A e are the caller's
// responsibility; the built-in families construct them exactly.
struct InitialState {
    VectorField u, v;
    SymField e, p, sigma;

    InitialState() = default;
    explicit InitialState(const Grid& g) : u(g), v(g), e(g), p(g), sigma(g) {}
};

// Result of the compatible-data construction. The corrected pair
// (v_lambda, sigma_lambda) satisfies the boundary compatibility
// S_lambda v_lambda + sigma_lambda nu = 0 at every non-transition boundary
// node, with the normal trace of sigma_lambda evaluated as
// trace_sigma0 + (1/lambda) * trace_ez0 (the same traces used to build the
// correction, so the identity holds to solver tolerance).
struct CompatibleData {
    VectorField v_lambda;      // v0 + (1/lambda) * vhat
    SymField sigma_lambda;     // sigma0 + (1/lambda) * e(z0)
    VectorField z0;            // solution of  z - div(e(z)) = 0, e(z) nu = -v0
    VectorField vhat;          // extension with boundary values -sigma0 nu
    double ez0_max = 0.0;      // max cell norm of e(z0), drives the margin bound
    // Nodal normal traces along part.nodes(): sigma0 nu (adjacent-cell
    // average) and the variational trace of e(z0) (equals -v0 at solver
    // convergence).
    std::vector<Vec<2>> trace_sigma0;
    std::vector<Vec<2>> trace_ez0;
};

// Builds compatible initial data for the dissipative boundary condition at
// parameter lambda, following the elliptic-correction construction:
//   z0 solves the discrete  z0 - div(e(z0)) = 0 with e(z0) nu = -v0,
//   vhat is the elliptic extension of the boundary values -sigma0 nu,
//   v_lambda = v0 + (1/lambda) vhat,  sigma_lambda = sigma0 + (1/lambda) e(z0).
// Preconditions validated: sym_gradient(u0) = e0 + p0, sigma0 = A e0,
// v0 = 0 at Dirichlet nodes, sigma0 nu = 0 at Neumann nodes, and a uniform
// stress margin: every cell keeps distance >= r_margin to the boundary of K.
// Throws std::invalid_argument naming the violated condition, or a
// margin error naming the worst cell and the smallest admissible lambda when
// lambda < ez0_max / r_margin.
CompatibleData make_initial(const Grid& g, const BoundaryPartition& part, const Hooke& hooke,
                            const ElasticitySet<2>& K, const InitialState& s0, double lambda,
                            double r_margin);

// Full corrected state for one sweep member: the displacement picks up the
// corrector z0 / lambda, the stress its strain e(z0) / lambda, the velocity
// becomes v_lambda, and the plastic field absorbs the non-elastic part of
// the corrector strain so that both state identities (sigma = A e and
// sym_gradient(u) = e + p) remain exact.
InitialState apply_compatible_correction(const Grid& g, const Hooke& hooke,
                                         const InitialState& base, const CompatibleData& data,
                                         double lambda);

// Per-node compatibility residual |S_lambda v_lambda + sigma_lambda nu| at
// non-transition boundary nodes (0 at transition nodes), indexed like
// part.nodes().
std::vector<double> compatibility_residual(const BoundaryPartition& part,
                                           const CompatibleData& data, double lambda,
                                           const VectorField& v0);

// --- Built-in initial-data families ---

// Divergence-free standing wave with traction-free boundary on the unit
// square: u = A(-cos(m pi x) sin(m pi y), sin(m pi x) cos(m pi y)),
// oscillating at frequency m pi sqrt(2 mu). e0 is the discrete gradient of
// u0 (so the additive decomposition holds exactly), v0 = 0.
InitialState make_standing_wave(const Grid& g, const Hooke& hooke, double amplitude, int mode);
double standing_wave_frequency(const Hooke& hooke, int mode);

// Gaussian velocity bump amplitude * exp(-|x-c|^2 / (2 r^2)) * direction;
// all other fields zero.
InitialState make_gaussian_velocity(const Grid& g, const Vec<2>& center, double radius,
                                    const Vec<2>& direction, double amplitude);

// Gaussian displacement bump of the same profile; e0 = sym_gradient(u0),
// sigma0 = hooke_apply(e0), v0 = p0 = 0.
InitialState make_gaussian_displacement(const Grid& g, const Hooke& hooke, const Vec<2>& center,
                                        double radius, const Vec<2>& direction,
                                        double amplitude);

// Pointwise sum of two initial states on the same grid.
InitialState combine(const Grid& g, const Hooke& hooke, const InitialState& a,
                     const InitialState& b);

// Adjacent-cell-averaged nodal normal traces tau nu along part.nodes().
std::vector<Vec<2>> nodal_normal_trace(const Grid& g, const BoundaryPartition& part,
                                       const SymField& tau);

// Matrix-free conjugate gradients for the SPD systems above; exposed for
// reuse and testing. Solves apply(x) = b to |r| <= tol * |b|; throws
// IterationLimitError on cap. Returns the iteration count.
long conjugate_gradient(const std::function<void(const std::vector<Vec<2>>&,
                                                 std::vector<Vec<2>>&)>& apply,
                        const std::vector<Vec<2>>& b, std::vector<Vec<2>>& x, double tol,
                        long cap);

}  // namespace plastlab
