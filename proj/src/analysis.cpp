#include "plastlab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "plastlab/initial_data.hpp"
#include "plastlab/traction_law.hpp"

namespace plastlab {

double TestFunction::value(const Vec<2>& x) const {
    if (constant) return 1.0;
    const Vec<2> d = x - center;
    const double s = dot(d, d);
    const double r2 = radius * radius;
    const double gauss = std::exp(-0.5 * s / r2);
    return poly ? (1.0 + s / r2) * gauss : gauss;
}

Vec<2> TestFunction::gradient(const Vec<2>& x) const {
    if (constant) return Vec<2>{};
    const Vec<2> d = x - center;
    const double s = dot(d, d);
    const double r2 = radius * radius;
    const double gauss = std::exp(-0.5 * s / r2);
    const double c = poly ? (1.0 - s / r2) / r2 : -1.0 / r2;
    return (c * gauss) * d;
}

double TestFunction::max_on_disk(const Vec<2>& x, double r) const {
    if (constant) return 1.0;
    auto radial = [this](double rho) {
        const double s = rho * rho;
        const double r2 = radius * radius;
        const double gauss = std::exp(-0.5 * s / r2);
        return poly ? (1.0 + s / r2) * gauss : gauss;
    };
    const double d = norm(x - center);
    const double lo = std::max(0.0, d - r);
    const double hi = d + r;
    if (!poly) return radial(lo);
    // The polynomial profile peaks at distance `radius` from the center.
    if (radius >= lo && radius <= hi) return radial(radius);
    return std::max(radial(lo), radial(hi));
}

namespace {

// exp(-z^2/2) <= 1e-12 beyond z = 7.44; 7.6 leaves margin for the
// polynomial prefactor.
constexpr double kSupportSigmas = 7.6;

std::vector<Vec<2>> transition_positions(const Grid& g, const BoundaryPartition& part) {
    std::vector<Vec<2>> out;
    for (std::size_t k = 0; k < part.size(); ++k)
        if (part[k].label == BoundaryLabel::Transition)
            out.push_back(g.node_pos(part[k].i, part[k].j));
    return out;
}

bool clear_of_transitions(const TestFunction& phi, const std::vector<Vec<2>>& sigma_nodes,
                          double h) {
    for (const Vec<2>& x : sigma_nodes)
        if (phi.max_on_disk(x, 3.0 * h) > 1e-9) return false;
    return true;
}

}  // namespace

std::vector<TestFunction> test_battery(const Grid& g, const BoundaryPartition& part) {
    const double L = std::min(g.Lx, g.Ly);
    const Vec<2> mid{0.5 * g.Lx, 0.5 * g.Ly};
    const std::vector<Vec<2>> sigma_nodes = transition_positions(g, part);

    std::vector<TestFunction> battery;
    battery.push_back({"constant", true, false, {}, 1.0, sigma_nodes.empty()});

    // Eight bumps kept well inside the domain: a ring around the center.
    for (int k = 0; k < 8; ++k) {
        const double ang = 0.25 * 3.14159265358979323846 * double(k);
        TestFunction f;
        f.name = "interior-" + std::to_string(k + 1);
        f.poly = (k % 2 == 1);
        f.center = mid + (0.13 * L) * Vec<2>{std::cos(ang), std::sin(ang)};
        f.radius = 0.055 * L;
        f.sigma_clear = clear_of_transitions(f, sigma_nodes, g.h);
        battery.push_back(f);
    }

    // Eight bumps straddling the boundary: edge midpoints and corners.
    const std::array<std::pair<const char*, Vec<2>>, 8> straddle{{
        {"edge-bottom", {0.5 * g.Lx, 0.0}},
        {"edge-right", {g.Lx, 0.5 * g.Ly}},
        {"edge-top", {0.5 * g.Lx, g.Ly}},
        {"edge-left", {0.0, 0.5 * g.Ly}},
        {"corner-00", {0.0, 0.0}},
        {"corner-10", {g.Lx, 0.0}},
        {"corner-11", {g.Lx, g.Ly}},
        {"corner-01", {0.0, g.Ly}},
    }};
    for (std::size_t k = 0; k < straddle.size(); ++k) {
        TestFunction f;
        f.name = straddle[k].first;
        f.poly = (k % 2 == 1);
        f.center = straddle[k].second;
        f.radius = 0.1 * L;
        f.sigma_clear = clear_of_transitions(f, sigma_nodes, g.h);
        battery.push_back(f);
    }

    // Seven bumps whose support stays numerically clear of every transition
    // node by at least 3h; the radius shrinks as needed but never below h/2.
    const std::array<Vec<2>, 15> candidates{{
        {0.5, 0.0}, {0.25, 0.0}, {0.75, 0.0}, {1.0, 0.5}, {0.5, 1.0}, {0.0, 0.5},
        {0.25, 1.0}, {0.75, 1.0}, {1.0, 0.25}, {1.0, 0.75}, {0.0, 0.25}, {0.0, 0.75},
        {0.5, 0.35}, {0.35, 0.6}, {0.65, 0.6},
    }};
    int placed = 0;
    for (std::size_t k = 0; k < candidates.size() && placed < 7; ++k) {
        const Vec<2> c{candidates[k][0] * g.Lx, candidates[k][1] * g.Ly};
        double dmin = std::numeric_limits<double>::infinity();
        for (const Vec<2>& x : sigma_nodes) dmin = std::min(dmin, norm(c - x));
        const double admissible = (dmin - 3.0 * g.h) / kSupportSigmas;
        const double r = std::min(0.05 * L, admissible);
        if (!(r >= 0.5 * g.h)) continue;
        TestFunction f;
        f.name = "clear-" + std::to_string(placed + 1);
        f.poly = (placed % 2 == 1);
        f.center = c;
        f.radius = r;
        f.sigma_clear = clear_of_transitions(f, sigma_nodes, g.h);
        if (!f.sigma_clear) continue;
        battery.push_back(f);
        ++placed;
    }
    if (placed < 7)
        throw std::invalid_argument(
            "test_battery: grid too coarse to keep seven bumps clear of the transition set");
    return battery;
}

namespace {

struct PhiTables {
    std::vector<double> node;   // per grid node
    std::vector<double> cell;   // per cell center
    std::vector<double> bnode;  // along the boundary partition
};

PhiTables tabulate(const Grid& g, const BoundaryPartition& part, const TestFunction& phi) {
    PhiTables t;
    t.node.resize(static_cast<std::size_t>(g.nnodes()));
    t.cell.resize(static_cast<std::size_t>(g.ncells()));
    t.bnode.resize(part.size());
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            t.node[static_cast<std::size_t>(g.node(i, j))] = phi.value(g.node_pos(i, j));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            t.cell[static_cast<std::size_t>(g.cell(i, j))] = phi.value(g.cell_center(i, j));
    for (std::size_t k = 0; k < part.size(); ++k)
        t.bnode[k] = t.node[static_cast<std::size_t>(part[k].index)];
    return t;
}

// The three-term pairing with phi pre-tabulated; div and Gv are the shared
// per-step fields, phiv is scratch.
double pairing_core(const Grid& g, const SymField& sigma, const VectorField& v,
                    const SymField& edot, const VectorField& div, const SymField& grad_v,
                    const PhiTables& t, VectorField& phiv) {
    const double h2 = g.h * g.h;
    double acc = 0.0;
    for (int c = 0; c < g.ncells(); ++c)
        acc -= t.cell[static_cast<std::size_t>(c)] * ddot(sigma.data[c], edot.data[c]) * h2;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const auto n = static_cast<std::size_t>(g.node(i, j));
            acc -= t.node[n] * dot(v.data[n], div.data[n]) * g.node_volume(i, j);
            phiv.data[n] = t.node[n] * v.data[n];
        }
    const SymField grad_phiv = sym_gradient(g, phiv);
    for (int c = 0; c < g.ncells(); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        acc -= ddot(sigma.data[c],
                    SymMat<2>(grad_phiv.data[c] - t.cell[ci] * grad_v.data[c])) * h2;
    }
    return acc;
}

void check_window(const Grid& g, const TestFunction& phi) {
    if (phi.constant) return;
    if (phi.center[0] < -phi.radius || phi.center[0] > g.Lx + phi.radius ||
        phi.center[1] < -phi.radius || phi.center[1] > g.Ly + phi.radius)
        throw std::invalid_argument(
            "duality_pairing: test function support exceeds the computational window");
}

// Recorded boundary dissipation increment (energy per unit length) at every
// boundary node of one step, re-evaluated from the model definitions.
std::vector<double> boundary_dissipation_increments(const Problem& pb, double dt,
                                                    const BoundaryTrace& bt) {
    std::vector<double> out(pb.part.size(), 0.0);
    for (std::size_t k = 0; k < pb.part.size(); ++k) {
        const BoundaryNode& b = pb.part[k];
        if (b.label == BoundaryLabel::Transition) continue;
        if (pb.mode.kind == BCMode::Kind::Limit) {
            if (b.label == BoundaryLabel::Dirichlet)
                out[k] = boundary_dissipation_density(pb.K, b.nu, Vec<2>(dt * bt.v_plus[k]));
        } else {
            const double sb =
                (b.label == BoundaryLabel::Dirichlet) ? pb.mode.lambda : 1.0 / pb.mode.lambda;
            out[k] = dt * (psi_eval(pb.K, b.nu, sb, bt.v_plus[k]) +
                           dot(bt.traction[k], bt.traction[k]) / (2.0 * sb));
        }
    }
    return out;
}

}  // namespace

double duality_pairing(const Grid& g, const BoundaryPartition& part, const SymField& sigma,
                       const VectorField& v, const SymField& edot,
                       const std::vector<Vec<2>>& traction, const TestFunction& phi) {
    if (traction.size() != part.size())
        throw std::invalid_argument("duality_pairing: traction does not match the partition");
    check_window(g, phi);
    const PhiTables t = tabulate(g, part, phi);
    const VectorField div = divergence_with_traction(g, part, sigma, traction);
    const SymField grad_v = sym_gradient(g, v);
    VectorField phiv(g);
    return pairing_core(g, sigma, v, edot, div, grad_v, t, phiv);
}

ConvexityReport convexity_check(const Problem& pb, const State& initial, const RunOptions& opt,
                                const std::vector<TestFunction>& battery, double sigma_scale) {
    const Grid& g = pb.grid;
    std::vector<PhiTables> tables;
    tables.reserve(battery.size());
    for (const TestFunction& phi : battery) {
        check_window(g, phi);
        tables.push_back(tabulate(g, pb.part, phi));
    }

    ConvexityReport rep;
    rep.names.reserve(battery.size());
    for (const TestFunction& phi : battery) {
        rep.names.push_back(phi.name);
        // The inequality is certified for fields clear of the transition set
        // and for the constant field, whose transition-node terms cancel
        // exactly (zero traction against zero recorded dissipation).
        rep.asserted.push_back((phi.sigma_clear || phi.constant) ? 1 : 0);
    }
    rep.per_function_min.assign(battery.size(), std::numeric_limits<double>::infinity());

    const double h2 = g.h * g.h;
    SymField edot(g), sigma_scaled(g);
    VectorField phiv(g);
    std::vector<double> hvals(static_cast<std::size_t>(g.ncells()));

    auto observer = [&](long, const State& before, const State& after,
                        const StepDiagnostics&, const BoundaryTrace& bt) {
        const double dt = after.t - before.t;
        for (int c = 0; c < g.ncells(); ++c) {
            edot.data[c] = (1.0 / dt) * (after.e.data[c] - before.e.data[c]);
            sigma_scaled.data[c] = sigma_scale * after.sigma.data[c];
            hvals[static_cast<std::size_t>(c)] =
                pb.K.support(SymMat<2>(after.p.data[c] - before.p.data[c]));
        }
        const VectorField div = divergence_with_traction(g, pb.part, sigma_scaled, bt.traction);
        const SymField grad_v = sym_gradient(g, after.v);
        const std::vector<double> bdiss = boundary_dissipation_increments(pb, dt, bt);

        for (std::size_t f = 0; f < battery.size(); ++f) {
            const PhiTables& t = tables[f];
            double lhs = 0.0;
            for (int c = 0; c < g.ncells(); ++c)
                lhs += t.cell[static_cast<std::size_t>(c)] *
                       hvals[static_cast<std::size_t>(c)] * h2;
            for (std::size_t k = 0; k < pb.part.size(); ++k)
                lhs += t.bnode[k] * bdiss[k] * pb.part[k].ds;
            const double rhs =
                dt * pairing_core(g, sigma_scaled, after.v, edot, div, grad_v, t, phiv);
            const double residual = lhs - rhs;
            const double scale = 1.0 + lhs + std::abs(rhs);
            rep.per_function_min[f] = std::min(rep.per_function_min[f], residual / scale);
        }
    };
    run(pb, initial, opt, observer);

    rep.steps = opt.nsteps;
    rep.worst_asserted = std::numeric_limits<double>::infinity();
    rep.worst_reported = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < battery.size(); ++f) {
        rep.worst_reported = std::min(rep.worst_reported, rep.per_function_min[f]);
        if (rep.asserted[f])
            rep.worst_asserted = std::min(rep.worst_asserted, rep.per_function_min[f]);
    }
    return rep;
}

FlowRuleReport flow_rule_residual(const Problem& pb, const State& initial,
                                  const RunOptions& opt) {
    const Grid& g = pb.grid;
    TestFunction one;
    one.name = "constant";
    one.constant = true;
    const PhiTables t = tabulate(g, pb.part, one);

    FlowRuleReport rep;
    rep.residual.reserve(static_cast<std::size_t>(opt.nsteps));
    rep.degenerate.reserve(static_cast<std::size_t>(opt.nsteps));

    const double h2 = g.h * g.h;
    SymField edot(g);
    VectorField phiv(g);
    auto observer = [&](long, const State& before, const State& after,
                        const StepDiagnostics& diag, const BoundaryTrace& bt) {
        const double dt = after.t - before.t;
        double lhs = 0.0;
        for (int c = 0; c < g.ncells(); ++c) {
            edot.data[c] = (1.0 / dt) * (after.e.data[c] - before.e.data[c]);
            lhs += pb.K.support(SymMat<2>(after.p.data[c] - before.p.data[c])) * h2;
        }
        const std::vector<double> bdiss = boundary_dissipation_increments(pb, dt, bt);
        for (std::size_t k = 0; k < pb.part.size(); ++k) lhs += bdiss[k] * pb.part[k].ds;

        const VectorField div = divergence_with_traction(g, pb.part, after.sigma, bt.traction);
        const SymField grad_v = sym_gradient(g, after.v);
        const double rhs =
            dt * pairing_core(g, after.sigma, after.v, edot, div, grad_v, t, phiv);

        // A step whose total dissipation is negligible against the current
        // energy has nothing flowing; its ratio would only measure the
        // roundoff of the pairing sums.
        const double floor = 1e-12 * (1.0 + diag.kinetic_after + diag.elastic_after);
        const double scale = lhs + std::abs(rhs);
        if (scale <= floor) {
            rep.residual.push_back(0.0);
            rep.degenerate.push_back(1);
        } else {
            rep.residual.push_back(std::abs(lhs - rhs) / scale);
            rep.degenerate.push_back(0);
        }
    };
    run(pb, initial, opt, observer);
    for (const double r : rep.residual) rep.max_residual = std::max(rep.max_residual, r);
    return rep;
}

double field_l2_distance(const Grid& g, const VectorField& a, const VectorField& b) {
    double acc = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const auto n = static_cast<std::size_t>(g.node(i, j));
            acc += dot(a.data[n] - b.data[n], a.data[n] - b.data[n]) * g.node_volume(i, j);
        }
    return std::sqrt(acc);
}

namespace {

SweepEntry sweep_member(const SweepScenario& sc, double lambda, bool limit_member) {
    State init(sc.grid, sc.part);
    BCMode mode;
    if (limit_member) {
        mode = BCMode::limit(lambda);
        init = make_state(sc.grid, sc.part, sc.base);
    } else {
        mode = BCMode::dissipative(lambda);
        const CompatibleData cd = make_initial(sc.grid, sc.part, sc.hooke, sc.K, sc.base,
                                               lambda, sc.r_margin);
        init = make_state(sc.grid, sc.part,
                          apply_compatible_correction(sc.grid, sc.hooke, sc.base, cd, lambda));
    }
    const Problem pb{sc.grid, sc.part, sc.hooke, sc.K, mode, sc.body_force};

    double flux = 0.0;
    auto observer = [&](long, const State& before, const State& after,
                        const StepDiagnostics&, const BoundaryTrace& bt) {
        const double dt = after.t - before.t;
        for (std::size_t k = 0; k < sc.part.size(); ++k)
            if (sc.part[k].label == BoundaryLabel::Neumann)
                flux += dot(bt.traction[k], bt.traction[k]) * sc.part[k].ds * dt;
    };
    const Trajectory tr = run(pb, init, sc.opts, observer);
    auto rows = energy_ledger(tr);

    SweepEntry e;
    e.lambda = limit_member ? 0.0 : lambda;
    e.neumann_flux = flux;
    e.psi_total = rows.back().boundary_psi_cum;
    e.flux_total = rows.back().boundary_flux_cum;
    e.plastic_total = rows.back().plastic_cum;
    e.kinetic_final = rows.back().kinetic;
    e.elastic_final = rows.back().elastic;
    e.sigma_gap_final = rows.back().sigma_gap;
    e.u_final = tr.final_state.u;
    e.ledger = std::move(rows);
    return e;
}

std::string member_name(const std::vector<double>& lambdas, std::size_t i) {
    if (i == lambdas.size()) return "limit";
    std::ostringstream os;
    os << "lambda=" << lambdas[i];
    return os.str();
}

}  // namespace

SweepReport lambda_sweep(const SweepScenario& sc, const std::vector<double>& lambdas,
                         int workers) {
    if (lambdas.size() < 2)
        throw std::invalid_argument("lambda_sweep: need at least two lambda values");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i - 1]))
            throw std::invalid_argument("lambda_sweep: lambda list must be strictly increasing");
    if (workers < 1) throw std::invalid_argument("lambda_sweep: workers must be >= 1");
    if (sc.opts.nsteps < 1) throw std::invalid_argument("lambda_sweep: nsteps must be >= 1");

    // Jobs: one per lambda plus the hard-constraint member at the end.
    const std::size_t njobs = lambdas.size() + 1;
    std::vector<SweepEntry> results(njobs);
    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= njobs) return;
            try {
                const bool limit_member = (i == njobs - 1);
                const double lambda = limit_member ? lambdas.back() : lambdas[i];
                results[i] = sweep_member(sc, lambda, limit_member);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure)
                    failure = std::make_exception_ptr(std::runtime_error(
                        "sweep member " + member_name(lambdas, i) + " failed: " + e.what()));
                return;
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), njobs);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nthreads; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    SweepReport rep;
    rep.entries.assign(results.begin(), results.end() - 1);
    rep.limit_entry = results.back();

    // Least-squares slope of log flux against log lambda.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int npos = 0;
    for (const SweepEntry& e : rep.entries) {
        if (!(e.neumann_flux > 0.0)) continue;
        const double x = std::log(e.lambda);
        const double y = std::log(e.neumann_flux);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++npos;
    }
    rep.flux_slope =
        (npos >= 2) ? (double(npos) * sxy - sx * sy) / (double(npos) * sxx - sx * sx) : 0.0;

    for (std::size_t i = 0; i + 1 < rep.entries.size(); ++i)
        rep.successive_diff.push_back(
            field_l2_distance(sc.grid, rep.entries[i + 1].u_final, rep.entries[i].u_final));
    rep.limit_diff =
        field_l2_distance(sc.grid, rep.limit_entry.u_final, rep.entries.back().u_final);
    return rep;
}

MoreauCheck moreau_lower_bound_check(const Problem& dissipative_pb, const State& init_dissipative,
                                     const Problem& limit_pb, const State& init_limit,
                                     const RunOptions& opt) {
    if (dissipative_pb.mode.kind != BCMode::Kind::Dissipative ||
        limit_pb.mode.kind != BCMode::Kind::Limit)
        throw std::invalid_argument(
            "moreau_lower_bound_check: mismatched configs (need one penalized, one limit)");
    const Grid& ga = dissipative_pb.grid;
    const Grid& gb = limit_pb.grid;
    if (ga.nx != gb.nx || ga.ny != gb.ny || ga.Lx != gb.Lx || ga.Ly != gb.Ly ||
        dissipative_pb.hooke.lambda != limit_pb.hooke.lambda ||
        dissipative_pb.hooke.mu != limit_pb.hooke.mu ||
        dissipative_pb.K.kind() != limit_pb.K.kind())
        throw std::invalid_argument("moreau_lower_bound_check: mismatched configs");
    if (dissipative_pb.K.kind() != SetKind::HalfspaceIntersection &&
        dissipative_pb.K.radius() != limit_pb.K.radius())
        throw std::invalid_argument("moreau_lower_bound_check: mismatched configs");

    const auto rows_d = energy_ledger(run(dissipative_pb, init_dissipative, opt));
    const auto rows_l = energy_ledger(run(limit_pb, init_limit, opt));

    MoreauCheck out;
    out.limit_total = rows_l.back().plastic_cum;  // cells + Dirichlet slip
    out.dissipative_total = rows_d.back().plastic_cum + rows_d.back().boundary_psi_cum;
    out.gap = out.dissipative_total - out.limit_total;
    out.tolerance = 1e-6 * (1.0 + out.dissipative_total + out.limit_total);
    out.ok = out.limit_total <= out.dissipative_total + out.tolerance;
    return out;
}

}  // namespace plastlab
