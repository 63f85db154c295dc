#include "plastlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "plastlab/traction_law.hpp"

namespace plastlab {

BCMode BCMode::dissipative(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("BCMode: lambda must be positive and finite");
    BCMode m;
    m.kind = Kind::Dissipative;
    m.lambda = lambda;
    return m;
}

BCMode BCMode::limit(double lambda_ref) {
    if (!(lambda_ref > 0.0))
        throw std::invalid_argument("BCMode: lambda_ref must be positive");
    BCMode m;
    m.kind = Kind::Limit;
    m.lambda_ref = lambda_ref;
    return m;
}

double cfl_dt(const Grid& g, const Hooke& hooke, double cfl) {
    validate_hooke<2>(hooke);
    if (!(cfl > 0.0))
        throw std::invalid_argument("cfl_dt: cfl must be positive");
    return cfl * g.h / std::sqrt(hooke.lambda + 2.0 * hooke.mu);
}

State make_state(const Grid& g, const BoundaryPartition& part, const InitialState& init) {
    State s(g, part);
    s.u = init.u;
    s.v = init.v;
    s.e = init.e;
    s.p = init.p;
    s.sigma = init.sigma;
    return s;
}

double kinetic_energy(const Grid& g, const VectorField& v) {
    double acc = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const Vec<2>& vn = v.data[g.node(i, j)];
            acc += 0.5 * dot(vn, vn) * g.node_volume(i, j);
        }
    return acc;
}

double elastic_energy(const Grid& g, const Hooke& hooke, const SymField& e) {
    const double h2 = g.h * g.h;
    double acc = 0.0;
    for (const SymMat<2>& ec : e.data) acc += 0.5 * ddot(hooke_apply(hooke, ec), ec) * h2;
    return acc;
}

namespace {

void check_state_shape(const Grid& g, const BoundaryPartition& part, const State& s,
                       const char* who) {
    if (s.u.data.size() != static_cast<std::size_t>(g.nnodes()) ||
        s.v.data.size() != static_cast<std::size_t>(g.nnodes()) ||
        s.e.data.size() != static_cast<std::size_t>(g.ncells()) ||
        s.p.data.size() != static_cast<std::size_t>(g.ncells()) ||
        s.sigma.data.size() != static_cast<std::size_t>(g.ncells()) ||
        s.slip.size() != part.size())
        throw std::invalid_argument(std::string(who) + ": state shape does not match the grid");
}

double max_abs_velocity(const VectorField& v) {
    double m = 0.0;
    for (const Vec<2>& vn : v.data) m = std::max(m, norm(vn));
    return m;
}

}  // namespace

State step(const Problem& pb, const State& s, const StepParams& params, StepDiagnostics* diag,
           BoundaryTrace* btrace) {
    const Grid& g = pb.grid;
    const double dt = params.dt;
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("step: dt must be positive and finite");
    validate_hooke<2>(pb.hooke);
    if (pb.mode.kind == BCMode::Kind::Dissipative &&
        (!(pb.mode.lambda > 0.0) || !std::isfinite(pb.mode.lambda)))
        throw std::invalid_argument("step: dissipative mode requires positive finite lambda");
    check_state_shape(g, pb.part, s, "step");

    const bool want_diag = diag != nullptr;
    const double kin_before = want_diag ? kinetic_energy(g, s.v) : 0.0;
    const double ela_before = want_diag ? elastic_energy(g, pb.hooke, s.e) : 0.0;

    State out(g, pb.part);
    out.t = s.t + dt;
    out.slip = s.slip;

    // Velocity predictor: interior elastic force plus midpoint body force.
    VectorField vp = s.v;
    VectorField fmid(g);
    const VectorField adj = sym_gradient_adjoint(g, s.sigma);
    const double tmid = s.t + 0.5 * dt;
    const bool has_force = static_cast<bool>(pb.body_force);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int n = g.node(i, j);
            const double w = g.node_volume(i, j);
            if (has_force) fmid.data[n] = pb.body_force(g.node_pos(i, j), tmid);
            vp.data[n] = s.v.data[n] + dt * ((-1.0 / w) * adj.data[n] + fmid.data[n]);
        }

    // Boundary resolution. The proximal update is implicit in the traction,
    // so it is unconditionally stable and satisfies T + P_C(S v+) = 0 exactly.
    double psi_inc = 0.0;
    double flux_inc = 0.0;
    double slip_diss_inc = 0.0;
    double gap_inc = 0.0;
    const auto& nodes = pb.part.nodes();
    if (btrace) {
        btrace->traction.assign(nodes.size(), Vec<2>{});
        btrace->v_plus.assign(nodes.size(), Vec<2>{});
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const BoundaryNode& b = nodes[k];
        const double alpha = dt * b.ds / g.node_volume(b.i, b.j);
        const Vec<2> v_pred = vp.data[b.index];
        Vec<2> v_plus = v_pred;
        Vec<2> traction{};
        if (b.label == BoundaryLabel::Transition) {
            // Label changes across this node: traction-free, but record the
            // coercivity bound on the unmodeled dissipation.
            gap_inc += pb.K.inradius() * norm(sym_outer(v_plus, b.nu)) * b.ds * dt;
        } else if (pb.mode.kind == BCMode::Kind::Limit) {
            if (b.label == BoundaryLabel::Dirichlet) {
                const auto pr = boundary_prox(pb.K, b.nu,
                                              std::numeric_limits<double>::infinity(), alpha,
                                              v_pred);
                v_plus = pr.v_plus;
                traction = pr.traction;
                const Vec<2> ds_slip = dt * v_plus;
                out.slip[k] = out.slip[k] + ds_slip;
                slip_diss_inc += b.ds * boundary_dissipation_density(pb.K, b.nu, ds_slip);
            }
            // Limit-mode Neumann nodes are traction-free.
        } else {
            const double sb =
                (b.label == BoundaryLabel::Dirichlet) ? pb.mode.lambda : 1.0 / pb.mode.lambda;
            const auto pr = boundary_prox(pb.K, b.nu, sb, alpha, v_pred);
            v_plus = pr.v_plus;
            traction = pr.traction;
            psi_inc += dt * b.ds * psi_eval(pb.K, b.nu, sb, v_plus);
            flux_inc += dt * b.ds * dot(traction, traction) / (2.0 * sb);
        }
        vp.data[b.index] = v_plus;
        if (btrace) {
            btrace->traction[k] = traction;
            btrace->v_plus[k] = v_plus;
        }
    }

    // Strain increment from the updated velocity, then the return map in the
    // inverse-Hooke metric; the projection output is stored as the stress so
    // admissibility holds to the projector's own tolerance.
    SymField deps = sym_gradient(g, vp);
    for (SymMat<2>& m : deps.data) m = dt * m;
    double plastic_inc = slip_diss_inc;
    double flow_gap_max = 0.0;
    double flow_res = 0.0;
    const double h2 = g.h * g.h;
    for (int c = 0; c < g.ncells(); ++c) {
        const SymMat<2> trial = s.sigma.data[c] + hooke_apply(pb.hooke, deps.data[c]);
        const SymMat<2> snew = pb.K.project(trial, pb.hooke);
        const SymMat<2> dp = hooke_inverse(pb.hooke, trial - snew);
        out.sigma.data[c] = snew;
        out.p.data[c] = s.p.data[c] + dp;
        out.e.data[c] = s.e.data[c] + (deps.data[c] - dp);
        const double hval = pb.K.support(dp);
        plastic_inc += h2 * hval;
        const double gap = std::abs(hval - ddot(snew, dp));
        flow_gap_max = std::max(flow_gap_max, gap / (1.0 + norm(dp)));
        flow_res += gap * h2;
    }

    // Kinematics and body-force work (done against the updated velocity, the
    // pairing under which the discrete balance closes at second order).
    double work_inc = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int n = g.node(i, j);
            out.v.data[n] = vp.data[n];
            out.u.data[n] = s.u.data[n] + dt * vp.data[n];
            if (has_force) work_inc += dt * dot(fmid.data[n], vp.data[n]) * g.node_volume(i, j);
        }

    const double max_v = max_abs_velocity(out.v);
    if (!std::isfinite(max_v)) {
        std::ostringstream msg;
        msg << "step: non-finite velocity after the update at t = " << out.t;
        throw std::runtime_error(msg.str());
    }

    if (want_diag) {
        diag->plastic_increment = plastic_inc;
        diag->boundary_psi_increment = psi_inc;
        diag->boundary_flux_increment = flux_inc;
        diag->work_increment = work_inc;
        diag->sigma_gap_increment = gap_inc;
        diag->kinetic_after = kinetic_energy(g, out.v);
        diag->elastic_after = elastic_energy(g, pb.hooke, out.e);
        diag->residual_increment = (diag->kinetic_after - kin_before) +
                                   (diag->elastic_after - ela_before) + plastic_inc + psi_inc +
                                   flux_inc - work_inc;
        diag->flow_gap_max = flow_gap_max;
        diag->flow_residual = flow_res;
        diag->max_velocity = max_v;
        diag->t_after = out.t;
    }
    return out;
}

Trajectory run(const Problem& pb, const State& initial, const RunOptions& opt) {
    return run(pb, initial, opt, StepObserver{});
}

Trajectory run(const Problem& pb, const State& initial, const RunOptions& opt,
               const StepObserver& observer) {
    const Grid& g = pb.grid;
    if (opt.nsteps < 0)
        throw std::invalid_argument("run: nsteps must be nonnegative");
    if (opt.snapshot_stride < 0)
        throw std::invalid_argument("run: snapshot_stride must be nonnegative");
    if (opt.nsteps > 0 && (!(opt.dt > 0.0) || !std::isfinite(opt.dt)))
        throw std::invalid_argument("run: dt must be positive and finite");
    check_state_shape(g, pb.part, initial, "run");

    Trajectory tr;
    tr.t0 = initial.t;
    tr.kinetic0 = kinetic_energy(g, initial.v);
    tr.elastic0 = elastic_energy(g, pb.hooke, initial.e);
    tr.steps.reserve(static_cast<std::size_t>(opt.nsteps));
    tr.snapshots.emplace_back(0, initial);

    const double guard = 1e6 * std::max(1.0, max_abs_velocity(initial.v));
    State cur = initial;
    BoundaryTrace bt;
    for (long k = 0; k < opt.nsteps; ++k) {
        StepDiagnostics d;
        State next = step(pb, cur, StepParams{opt.dt, 0.0}, &d, observer ? &bt : nullptr);
        if (observer) observer(k, cur, next, d, bt);
        cur = std::move(next);
        if (d.max_velocity > guard) {
            std::ostringstream msg;
            msg << "run: velocity blow-up at step " << (k + 1) << " (t = " << cur.t
                << "): max |v| = " << d.max_velocity << " exceeds 1e6 x initial scale "
                << guard / 1e6 << "; dt = " << opt.dt
                << " most likely violates the explicit stability bound";
            throw std::runtime_error(msg.str());
        }
        tr.steps.push_back(d);
        if (opt.snapshot_stride > 0 && (k + 1) % opt.snapshot_stride == 0 &&
            (k + 1) != opt.nsteps)
            tr.snapshots.emplace_back(k + 1, cur);
    }
    if (opt.nsteps > 0) tr.snapshots.emplace_back(opt.nsteps, cur);
    tr.final_state = cur;
    return tr;
}

std::vector<LedgerRow> energy_ledger(const Trajectory& tr) {
    std::vector<LedgerRow> rows;
    rows.reserve(tr.steps.size() + 1);
    const double e0 = tr.kinetic0 + tr.elastic0;

    LedgerRow first;
    first.t = tr.t0;
    first.kinetic = tr.kinetic0;
    first.elastic = tr.elastic0;
    rows.push_back(first);

    double plastic = 0.0, psi = 0.0, flux = 0.0, work = 0.0, gap = 0.0;
    for (const StepDiagnostics& d : tr.steps) {
        plastic += d.plastic_increment;
        psi += d.boundary_psi_increment;
        flux += d.boundary_flux_increment;
        work += d.work_increment;
        gap += d.sigma_gap_increment;
        LedgerRow r;
        r.t = d.t_after;
        r.kinetic = d.kinetic_after;
        r.elastic = d.elastic_after;
        r.plastic_cum = plastic;
        r.boundary_psi_cum = psi;
        r.boundary_flux_cum = flux;
        r.work_cum = work;
        r.residual = (r.kinetic + r.elastic - e0) + plastic + psi + flux - work;
        r.sigma_gap = gap;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace plastlab
