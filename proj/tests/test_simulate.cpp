#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "helpers.hpp"
#include "plastlab/simulate.hpp"
#include "plastlab/traction_law.hpp"

using namespace plastlab;
using namespace plastlab::testing;

namespace {

const double kPi = 3.14159265358979323846;

BoundaryPartition bottom_dirichlet(const Grid& g) {
    std::array<std::vector<EdgeInterval>, 4> edges;
    edges[0] = {{BoundaryLabel::Dirichlet, 0.0, 1.0}};
    edges[1] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    edges[2] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    edges[3] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    return BoundaryPartition::make(g, edges);
}

// Downward pulse above the Dirichlet bottom edge; strong enough to drive a
// large patch of cells past a small cylinder yield radius.
State plastic_pulse_state(const Grid& g, const BoundaryPartition& part) {
    return make_state(g, part,
                      make_gaussian_velocity(g, {0.5, 0.35}, 0.12, {0.0, -1.0}, 0.5));
}

Problem plastic_problem(const Grid& g, BCMode mode) {
    return Problem{g,    bottom_dirichlet(g),          Hooke{1.0, 1.0},
                   ElasticitySet<2>::deviatoric_cylinder(0.05), mode, nullptr};
}

double rel_field_distance(const Grid& g, const VectorField& a, const VectorField& b) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int n = g.node(i, j);
            const double w = g.node_volume(i, j);
            num += dot(a.data[n] - b.data[n], a.data[n] - b.data[n]) * w;
            den += dot(b.data[n], b.data[n]) * w;
        }
    return std::sqrt(num) / std::sqrt(den);
}

}  // namespace

TEST_CASE("cfl_dt gives the unit-density pressure-wave bound") {
    const Grid g = Grid::make(1.0, 1.0, 10, 10);  // h = 0.1
    const Hooke hooke{1.0, 1.0};
    CHECK(cfl_dt(g, hooke, 0.5) == doctest::Approx(0.5 * 0.1 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(cfl_dt(g, hooke, 1.0) == doctest::Approx(2.0 * cfl_dt(g, hooke, 0.5)).epsilon(1e-14));
    CHECK_THROWS_AS(cfl_dt(g, hooke, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cfl_dt(g, Hooke{1.0, -1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("an all-zero state is an exact fixed point of the step") {
    const Grid g = Grid::make(1.0, 1.0, 8, 8);
    const Problem pb = plastic_problem(g, BCMode::dissipative(100.0));
    const State zero(g, pb.part);
    StepDiagnostics d;
    BoundaryTrace bt;
    const State out = step(pb, zero, StepParams{0.01, 0.0}, &d, &bt);
    CHECK(out.t == doctest::Approx(0.01).epsilon(1e-15));
    for (const Vec<2>& v : out.v.data) CHECK(norm(v) == 0.0);
    for (const Vec<2>& u : out.u.data) CHECK(norm(u) == 0.0);
    for (const SymMat<2>& m : out.sigma.data) CHECK(norm(m) == 0.0);
    for (const SymMat<2>& m : out.p.data) CHECK(norm(m) == 0.0);
    for (const Vec<2>& T : bt.traction) CHECK(norm(T) == 0.0);
    CHECK(d.plastic_increment == 0.0);
    CHECK(d.boundary_psi_increment == 0.0);
    CHECK(d.boundary_flux_increment == 0.0);
    CHECK(d.residual_increment == 0.0);
    CHECK(d.sigma_gap_increment == 0.0);
}

TEST_CASE("the return map realizes the incremental minimization cell by cell") {
    // Traction-free boundary isolates the volumetric update; a coarse grid
    // with a violent velocity field forces every cell well past yield.
    const Grid g = Grid::make(1.0, 1.0, 2, 2);
    const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Neumann);
    const Hooke hooke{1.3, 0.8};
    const auto K = ElasticitySet<2>::deviatoric_cylinder(0.2);
    const Problem pb{g, part, hooke, K, BCMode::limit(), nullptr};

    State s0(g, part);
    for (auto& v : s0.v.data) v = random_vec<2>(1.0);
    for (int c = 0; c < g.ncells(); ++c) {
        SymMat<2> e = random_sym<2>(0.05);
        s0.e.data[c] = e;
        s0.sigma.data[c] = hooke_apply(hooke, e);
        if (!K.contains(s0.sigma.data[c])) {
            s0.sigma.data[c] = K.project(s0.sigma.data[c]);
            s0.e.data[c] = hooke_inverse(hooke, s0.sigma.data[c]);
        }
    }

    const double dt = 0.4;  // huge on purpose: one step, no stability concern
    const State s1 = step(pb, s0, StepParams{dt, 0.0});

    int yielded = 0;
    for (int c = 0; c < g.ncells(); ++c) {
        const SymMat<2> dp = s1.p.data[c] - s0.p.data[c];
        const SymMat<2> e_trial = s1.e.data[c] + dp;  // = e0 + dt * strain rate
        const SymMat<2> sig = s1.sigma.data[c];

        // Stress law, admissibility, and flow-rule complementarity.
        CHECK(norm(sig - hooke_apply(hooke, s1.e.data[c])) <= 1e-12 * (1.0 + norm(sig)));
        CHECK(K.margin_distance(sig) >= -1e-9);
        const double hval = K.support(dp);
        CHECK(std::abs(hval - ddot(sig, dp)) <= 1e-10 * (1.0 + norm(dp)));

        // No admissible candidate improves the incremental energy.
        auto objective = [&](const SymMat<2>& q) {
            const SymMat<2> el = e_trial - q;
            return 0.5 * ddot(hooke_apply(hooke, el), el) + K.support(q);
        };
        const double jstar = objective(dp);
        for (int trial = 0; trial < 2000; ++trial) {
            SymMat<2> delta = random_sym<2>(trial % 2 ? 0.3 : 0.003);
            const double tr = delta.trace();
            for (int i = 0; i < 2; ++i) delta.set(i, i, delta(i, i) - 0.5 * tr);
            const SymMat<2> cand = (trial % 3 == 0) ? delta : SymMat<2>(dp + delta);
            CHECK(jstar <= objective(cand) + 1e-12 * (1.0 + std::abs(jstar)));
        }
        if (norm(dp) > 1e-12) ++yielded;
    }
    CHECK(yielded == g.ncells());
}

TEST_CASE("a zero-step run echoes the initial state") {
    const Grid g = Grid::make(1.0, 1.0, 8, 8);
    const Problem pb = plastic_problem(g, BCMode::dissipative(10.0));
    const State init = plastic_pulse_state(g, pb.part);
    const Trajectory tr = run(pb, init, RunOptions{0, 0.0, 0});
    CHECK(tr.steps.empty());
    REQUIRE(tr.snapshots.size() == 1);
    CHECK(tr.snapshots[0].first == 0);
    CHECK(std::memcmp(tr.final_state.v.data.data(), init.v.data.data(),
                      init.v.data.size() * sizeof(Vec<2>)) == 0);
    const auto rows = energy_ledger(tr);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].t == 0.0);
    CHECK(rows[0].kinetic == doctest::Approx(kinetic_energy(g, init.v)).epsilon(1e-15));
    CHECK(rows[0].residual == 0.0);
}

TEST_CASE("snapshot stride keeps the requested states exactly once") {
    const Grid g = Grid::make(1.0, 1.0, 8, 8);
    const Problem pb = plastic_problem(g, BCMode::dissipative(10.0));
    const State init = plastic_pulse_state(g, pb.part);
    const double dt = cfl_dt(g, Hooke{1.0, 1.0}, 0.5);

    auto indices = [&](long stride) {
        std::vector<long> idx;
        for (const auto& [k, st] : run(pb, init, RunOptions{10, dt, stride}).snapshots)
            idx.push_back(k);
        return idx;
    };
    CHECK(indices(4) == std::vector<long>{0, 4, 8, 10});
    CHECK(indices(5) == std::vector<long>{0, 5, 10});
    CHECK(indices(0) == std::vector<long>{0, 10});
}

TEST_CASE("a uniform body force integrates rigid motion exactly") {
    // Constant f: no strain ever, so v(t) = f t and the ledger residual has
    // the closed form -(dt^2/2) |f|^2 |Omega| per step.
    const Grid g = Grid::make(1.0, 1.0, 6, 6);
    const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Neumann);
    const Vec<2> f{0.3, -0.2};
    const Problem pb{g,
                     part,
                     Hooke{1.0, 1.0},
                     ElasticitySet<2>::ball(1e6),
                     BCMode::limit(),
                     [f](const Vec<2>&, double) { return f; }};
    const State init(g, part);
    const long n = 17;
    const double dt = 0.01;
    const Trajectory tr = run(pb, init, RunOptions{n, dt, 0});
    for (const Vec<2>& v : tr.final_state.v.data)
        CHECK(norm(v - double(n) * dt * f) <= 1e-15 * norm(f) * double(n));
    for (const SymMat<2>& m : tr.final_state.sigma.data) CHECK(norm(m) == 0.0);
    const auto rows = energy_ledger(tr);
    const double expected = -0.5 * dt * dt * dot(f, f) * double(n);
    CHECK(rows.back().residual == doctest::Approx(expected).epsilon(1e-10));

    // Linear-in-time forcing is integrated exactly by midpoint sampling.
    const double c = 0.7;
    Problem pb2 = pb;
    pb2.body_force = [c](const Vec<2>&, double t) { return Vec<2>{0.0, c * t}; };
    const Trajectory tr2 = run(pb2, init, RunOptions{n, dt, 0});
    const double T = double(n) * dt;
    for (const Vec<2>& v : tr2.final_state.v.data)
        CHECK(std::abs(v[1] - 0.5 * c * T * T) <= 1e-14 * (1.0 + 0.5 * c * T * T));
}

TEST_CASE("the free standing wave tracks its closed form at first order") {
    const Hooke hooke{1.0, 1.0};
    const double amplitude = 1e-3;
    const double omega = standing_wave_frequency(hooke, 1);
    const double tfinal = 0.2;

    auto final_u = [&](int n, long nsteps) {
        const Grid g = Grid::make(1.0, 1.0, n, n);
        const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Neumann);
        const Problem pb{g, part, hooke, ElasticitySet<2>::ball(1e6), BCMode::limit(), nullptr};
        const State init = make_state(g, part, make_standing_wave(g, hooke, amplitude, 1));
        const Trajectory tr = run(pb, init, RunOptions{nsteps, tfinal / double(nsteps), 0});
        // Free oscillation never dissipates: all cumulative columns stay 0.
        const auto rows = energy_ledger(tr);
        CHECK(rows.back().plastic_cum == 0.0);
        CHECK(rows.back().boundary_psi_cum == 0.0);
        CHECK(rows.back().work_cum == 0.0);
        return tr.final_state.u;
    };

    const int n = 32;
    const Grid g = Grid::make(1.0, 1.0, n, n);
    const long base = 28;  // dt ~ 0.8 of the cfl(0.5) bound on this grid
    const VectorField u1 = final_u(n, base);
    const VectorField u2 = final_u(n, 2 * base);
    const VectorField u4 = final_u(n, 4 * base);

    VectorField exact(g);
    const InitialState wave = make_standing_wave(g, hooke, amplitude, 1);
    const double scale = std::cos(omega * tfinal);
    for (std::size_t k = 0; k < exact.data.size(); ++k) exact.data[k] = scale * wave.u.data[k];

    CHECK(rel_field_distance(g, u1, exact) <= 0.05);
    CHECK(rel_field_distance(g, u4, exact) <= 0.02);

    // dt-halving self-convergence at first order.
    double d12 = 0.0, d24 = 0.0;
    for (std::size_t k = 0; k < u1.data.size(); ++k) {
        d12 += dot(u1.data[k] - u2.data[k], u1.data[k] - u2.data[k]);
        d24 += dot(u2.data[k] - u4.data[k], u2.data[k] - u4.data[k]);
    }
    const double ratio = std::sqrt(d12 / d24);
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
}

TEST_CASE("the dissipative boundary identity holds exactly after the update") {
    const Grid g = Grid::make(1.0, 1.0, 16, 16);
    for (const bool use_ball : {true, false}) {
        const auto K = use_ball ? ElasticitySet<2>::ball(0.08)
                                : ElasticitySet<2>::deviatoric_cylinder(0.05);
        const double lambda = 50.0;
        Problem pb = plastic_problem(g, BCMode::dissipative(lambda));
        pb.K = K;
        State s = plastic_pulse_state(g, pb.part);
        const double dt = cfl_dt(g, pb.hooke, 0.5);

        for (int k = 0; k < 8; ++k) {
            StepDiagnostics d;
            BoundaryTrace bt;
            const State next = step(pb, s, StepParams{dt, 0.0}, &d, &bt);

            double flux_pairing = 0.0;
            for (std::size_t b = 0; b < pb.part.size(); ++b) {
                const BoundaryNode& node = pb.part[b];
                const Vec<2> T = bt.traction[b];
                const Vec<2> vp = bt.v_plus[b];
                if (node.label == BoundaryLabel::Transition) {
                    CHECK(norm(T) == 0.0);
                    continue;
                }
                const double sb =
                    (node.label == BoundaryLabel::Dirichlet) ? lambda : 1.0 / lambda;
                const Vec<2> xi = project_minus_knu(pb.K, node.nu, 1.0, sb * vp);
                CHECK(norm(T + xi) <= 1e-12 * (1.0 + norm(T)));
                flux_pairing -= dot(T, vp) * node.ds * dt;
            }
            // The recorded boundary dissipation equals the traction pairing.
            const double recorded = d.boundary_psi_increment + d.boundary_flux_increment;
            CHECK(std::abs(recorded - flux_pairing) <= 1e-12 * (1.0 + std::abs(recorded)));
            s = next;
        }
    }
}

TEST_CASE("the hard-constraint limit sticks or slips on the Dirichlet part") {
    const Grid g = Grid::make(1.0, 1.0, 16, 16);
    const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Dirichlet);
    const auto K = ElasticitySet<2>::ball(0.04);
    const Problem pb{g, part, Hooke{1.0, 1.0}, K, BCMode::limit(), nullptr};
    State s = make_state(g, part, make_gaussian_velocity(g, {0.5, 0.5}, 0.2, {1.0, 0.4}, 0.6));
    const double dt = cfl_dt(g, pb.hooke, 0.5);

    std::vector<Vec<2>> slip_sum(part.size());
    int stuck = 0, slipping = 0;
    for (int k = 0; k < 30; ++k) {
        StepDiagnostics d;
        BoundaryTrace bt;
        const State next = step(pb, s, StepParams{dt, 0.0}, &d, &bt);
        for (std::size_t b = 0; b < part.size(); ++b) {
            const BoundaryNode& node = part[b];
            const Vec<2> T = bt.traction[b];
            const Vec<2> vp = bt.v_plus[b];
            slip_sum[b] = slip_sum[b] + dt * vp;
            CHECK(minus_knu_membership(pb.K, node.nu, -1.0 * T, 1e-10));
            if (norm(vp) <= 1e-14) {
                ++stuck;
            } else {
                ++slipping;
                // Slip identity: the traction pairing equals the dissipation.
                const double diss = boundary_dissipation_density(pb.K, node.nu, vp);
                CHECK(std::abs(-dot(T, vp) - diss) <= 1e-12 * (1.0 + diss));
            }
        }
        s = next;
    }
    CHECK(stuck > 0);
    CHECK(slipping > 0);
    for (std::size_t b = 0; b < part.size(); ++b)
        CHECK(norm(s.slip[b] - slip_sum[b]) <= 1e-13 * (1.0 + norm(slip_sum[b])));

    // Mixed limit problem: Neumann nodes carry exactly zero traction.
    const Problem pbm = plastic_problem(g, BCMode::limit());
    State sm = plastic_pulse_state(g, pbm.part);
    for (int k = 0; k < 5; ++k) {
        BoundaryTrace bt;
        sm = step(pbm, sm, StepParams{dt, 0.0}, nullptr, &bt);
        for (std::size_t b = 0; b < pbm.part.size(); ++b)
            if (pbm.part[b].label == BoundaryLabel::Neumann) CHECK(norm(bt.traction[b]) == 0.0);
    }
}

TEST_CASE("plastic runs keep the invariants and close the energy ledger") {
    const Grid g = Grid::make(1.0, 1.0, 32, 32);
    const Problem pb = plastic_problem(g, BCMode::dissipative(100.0));
    const State init = plastic_pulse_state(g, pb.part);
    const double dt = cfl_dt(g, pb.hooke, 0.5);
    const long nsteps = 48;

    const Trajectory tr = run(pb, init, RunOptions{nsteps, dt, 0});
    const auto rows = energy_ledger(tr);
    REQUIRE(rows.size() == static_cast<std::size_t>(nsteps) + 1);

    // Yield actually happened and every dissipation channel is active.
    CHECK(rows.back().plastic_cum > 1e-6);
    CHECK(rows.back().boundary_psi_cum > 0.0);
    CHECK(rows.back().boundary_flux_cum > 0.0);
    CHECK(rows.back().work_cum == 0.0);

    // Complementarity of every cell update, every step.
    for (const StepDiagnostics& d : tr.steps) {
        CHECK(d.flow_gap_max <= 1e-8);
        CHECK(d.flow_residual <= 1e-6);
    }

    // Monotone time, cumulative columns nondecreasing.
    for (std::size_t r = 1; r < rows.size(); ++r) {
        CHECK(rows[r].t > rows[r - 1].t);
        CHECK(rows[r].plastic_cum >= rows[r - 1].plastic_cum);
        CHECK(rows[r].boundary_psi_cum >= rows[r - 1].boundary_psi_cum);
        CHECK(rows[r].boundary_flux_cum >= rows[r - 1].boundary_flux_cum);
    }

    // Stress admissibility, stress law, and kinematic decomposition persist.
    const State& fin = tr.final_state;
    const SymField grad_u = sym_gradient(g, fin.u);
    for (int c = 0; c < g.ncells(); ++c) {
        CHECK(pb.K.margin_distance(fin.sigma.data[c]) >= -1e-9);
        CHECK(norm(fin.sigma.data[c] - hooke_apply(pb.hooke, fin.e.data[c])) <=
              1e-12 * (1.0 + norm(fin.sigma.data[c])));
        CHECK(norm(grad_u.data[c] - (fin.e.data[c] + fin.p.data[c])) <=
              1e-9 * double(nsteps));
    }

    // The balance defect is small next to the moved energy and first order
    // in dt: halving the step roughly halves the worst defect.
    auto max_residual = [&](long n, double step_dt) {
        const Trajectory t2 = run(pb, init, RunOptions{n, step_dt, 0});
        double m = 0.0;
        for (const LedgerRow& r : energy_ledger(t2)) m = std::max(m, std::abs(r.residual));
        return m;
    };
    const double r1 = max_residual(nsteps, dt);
    const double r2 = max_residual(2 * nsteps, 0.5 * dt);
    CHECK(r1 <= 0.05 * tr.kinetic0);
    const double ratio = r1 / r2;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
}

TEST_CASE("identical runs are bit-identical") {
    const Grid g = Grid::make(1.0, 1.0, 16, 16);
    const Problem pb = plastic_problem(g, BCMode::dissipative(100.0));
    const State init = plastic_pulse_state(g, pb.part);
    const double dt = cfl_dt(g, pb.hooke, 0.5);
    const Trajectory a = run(pb, init, RunOptions{20, dt, 0});
    const Trajectory b = run(pb, init, RunOptions{20, dt, 0});
    CHECK(std::memcmp(a.final_state.u.data.data(), b.final_state.u.data.data(),
                      a.final_state.u.data.size() * sizeof(Vec<2>)) == 0);
    CHECK(std::memcmp(a.final_state.sigma.data.data(), b.final_state.sigma.data.data(),
                      a.final_state.sigma.data.size() * sizeof(SymMat<2>)) == 0);
    const auto ra = energy_ledger(a);
    const auto rb = energy_ledger(b);
    for (std::size_t r = 0; r < ra.size(); ++r) {
        CHECK(ra[r].residual == rb[r].residual);
        CHECK(ra[r].plastic_cum == rb[r].plastic_cum);
    }
}

TEST_CASE("the blow-up guard aborts an unstable run with a diagnostic") {
    const Grid g = Grid::make(1.0, 1.0, 16, 16);
    const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Neumann);
    const Hooke hooke{1.0, 1.0};
    const Problem pb{g, part, hooke, ElasticitySet<2>::ball(1e6), BCMode::limit(), nullptr};
    const State init = make_state(g, part, make_standing_wave(g, hooke, 1.0, 1));
    const double dt = 10.0 * cfl_dt(g, hooke, 1.0);
    CHECK_THROWS_WITH_AS(run(pb, init, RunOptions{500, dt, 0}),
                         doctest::Contains("blow-up"), std::runtime_error);
}

TEST_CASE("step and run reject malformed inputs") {
    const Grid g = Grid::make(1.0, 1.0, 8, 8);
    const Problem pb = plastic_problem(g, BCMode::dissipative(10.0));
    const State good(g, pb.part);
    CHECK_THROWS_AS(step(pb, good, StepParams{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(step(pb, good, StepParams{-0.1, 0.0}), std::invalid_argument);

    const Grid g2 = Grid::make(1.0, 1.0, 4, 4);
    const State wrong(g2, BoundaryPartition::uniform(g2, BoundaryLabel::Neumann));
    CHECK_THROWS_WITH_AS(step(pb, wrong, StepParams{0.01, 0.0}),
                         doctest::Contains("shape"), std::invalid_argument);
    CHECK_THROWS_AS(run(pb, good, RunOptions{-1, 0.01, 0}), std::invalid_argument);
    CHECK_THROWS_AS(run(pb, good, RunOptions{5, 0.0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(BCMode::dissipative(0.0), std::invalid_argument);
}
