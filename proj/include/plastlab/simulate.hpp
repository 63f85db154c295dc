#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "plastlab/elasticity_set.hpp"
#include "plastlab/grid.hpp"
#include "plastlab/initial_data.hpp"
#include "plastlab/operators.hpp"

namespace plastlab {

// Complete per-step state. The boundary slip vector accumulates dt * v at
// Dirichlet nodes of the hard-constraint (limit) model; it is a diagnostic
// recording of the boundary plastic flow, never read back by the stepper.
struct State {
    double t = 0.0;
    VectorField u, v;
    SymField e, p, sigma;
    std::vector<Vec<2>> slip;  // indexed like the boundary partition

    State() = default;
    State(const Grid& g, const BoundaryPartition& part)
        : u(g), v(g), e(g), p(g), sigma(g), slip(part.size()) {}
};

// Boundary condition family: the dissipative model with weight
// S_lambda = lambda on Dirichlet and 1/lambda on Neumann nodes, or its
// lambda -> infinity limit (exact stick/slip constraint on Dirichlet nodes,
// traction-free Neumann nodes). lambda_ref is accepted in Limit mode for
// interface compatibility; the proximal update realizes the exact limit and
// needs no reference value.
struct BCMode {
    enum class Kind { Dissipative, Limit };
    Kind kind = Kind::Dissipative;
    double lambda = 1.0;
    double lambda_ref = 1e6;

    static BCMode dissipative(double lambda);
    static BCMode limit(double lambda_ref = 1e6);
};

using BodyForce = std::function<Vec<2>(const Vec<2>&, double)>;

// Everything held fixed over a trajectory. Density is 1.
struct Problem {
    Grid grid;
    BoundaryPartition part;
    Hooke hooke;
    ElasticitySet<2> K;
    BCMode mode;
    BodyForce body_force;  // null means zero; sampled at step midpoints
};

struct StepParams {
    double dt = 0.0;
    double cfl = 0.5;  // informational; dt is what the stepper uses
};

// dt = cfl * h / sqrt(lambda + 2 mu) (unit density pressure wave speed).
double cfl_dt(const Grid& g, const Hooke& hooke, double cfl);

// Wraps initial fields into a stepper state (t = 0, zero accumulated slip).
State make_state(const Grid& g, const BoundaryPartition& part, const InitialState& init);

// Scalar diagnostics of one step; all "increment" entries are this step's
// contribution to the corresponding cumulative ledger column.
struct StepDiagnostics {
    double plastic_increment = 0.0;        // cells, plus limit-mode boundary slip
    double boundary_psi_increment = 0.0;   // relaxed boundary dissipation (dissipative mode)
    double boundary_flux_increment = 0.0;  // |T|^2 / (2 S) term (dissipative mode)
    double work_increment = 0.0;           // body-force work
    double sigma_gap_increment = 0.0;      // transition-node flux surrogate
    double residual_increment = 0.0;       // energy-balance defect of this step
    double kinetic_after = 0.0;
    double elastic_after = 0.0;
    double flow_gap_max = 0.0;    // max_c (H(dp) - sigma : dp) / (1 + |dp|)
    double flow_residual = 0.0;   // sum_c |H(dp) - sigma : dp| h^2
    double max_velocity = 0.0;
    double t_after = 0.0;
};

// Post-update boundary quantities for invariant checks, indexed like the
// partition.
struct BoundaryTrace {
    std::vector<Vec<2>> traction;
    std::vector<Vec<2>> v_plus;
};

// One explicit step: velocity predictor from the stress divergence and body
// force, proximal boundary resolution (which yields the traction and the
// updated boundary velocity simultaneously), strain increment from the
// updated velocity, and the return map in the inverse-Hooke metric.
State step(const Problem& pb, const State& s, const StepParams& params,
           StepDiagnostics* diag = nullptr, BoundaryTrace* btrace = nullptr);

double kinetic_energy(const Grid& g, const VectorField& v);  // 1/2 sum |v|^2 w_n
double elastic_energy(const Grid& g, const Hooke& hooke, const SymField& e);

// Cumulative energy-ledger row (fixed CSV column order).
struct LedgerRow {
    double t = 0.0;
    double kinetic = 0.0;
    double elastic = 0.0;
    double plastic_cum = 0.0;
    double boundary_psi_cum = 0.0;
    double boundary_flux_cum = 0.0;
    double work_cum = 0.0;
    double residual = 0.0;
    double sigma_gap = 0.0;
};

struct Trajectory {
    double t0 = 0.0;
    double kinetic0 = 0.0;
    double elastic0 = 0.0;
    std::vector<StepDiagnostics> steps;
    std::vector<std::pair<long, State>> snapshots;  // (step index, state)
    State final_state;
};

struct RunOptions {
    long nsteps = 0;
    double dt = 0.0;
    long snapshot_stride = 0;  // 0: keep only the initial and final states
};

// Sequential deterministic run; aborts with a diagnostic when the velocity
// exceeds 1e6 times its initial scale (explicit-scheme blow-up guard).
Trajectory run(const Problem& pb, const State& initial, const RunOptions& opt);

// Streaming variant: the observer sees every step (states before and after,
// diagnostics, boundary traction) without the trajectory storing any of it.
using StepObserver = std::function<void(long k, const State& before, const State& after,
                                        const StepDiagnostics& diag, const BoundaryTrace& bt)>;
Trajectory run(const Problem& pb, const State& initial, const RunOptions& opt,
               const StepObserver& observer);

// Accumulates the per-step diagnostics into ledger rows; the residual column
// is the left-minus-right defect of the energy balance up to that time.
std::vector<LedgerRow> energy_ledger(const Trajectory& tr);

}  // namespace plastlab
