#include "plastlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plastlab/analysis.hpp"

namespace plastlab {

namespace {

struct Auditor {
    VerifyReport rep;

    CheckResult& add(const std::string& name) {
        rep.checks.push_back(CheckResult{name, CheckStatus::Skip, 0.0, 0.0, ""});
        return rep.checks.back();
    }
    void pass(CheckResult& c, double measured, double tol, const std::string& detail = "") {
        c.status = CheckStatus::Pass;
        c.measured = measured;
        c.tolerance = tol;
        c.detail = detail;
    }
    void fail(CheckResult& c, double measured, double tol, const std::string& detail) {
        c.status = CheckStatus::Fail;
        c.measured = measured;
        c.tolerance = tol;
        c.detail = detail;
    }
    void skip(CheckResult& c, const std::string& why) {
        c.status = CheckStatus::Skip;
        c.detail = why;
    }
};

std::vector<long> expected_steps(long nsteps, long stride) {
    std::vector<long> out{0};
    if (stride > 0)
        for (long k = stride; k < nsteps; k += stride) out.push_back(k);
    if (nsteps > 0) out.push_back(nsteps);
    return out;
}

State record_state(const Grid& g, const BoundaryPartition& part, const SnapshotRecord& rec) {
    State s(g, part);
    s.t = rec.t;
    s.u = rec.u;
    s.v = rec.v;
    s.e = rec.e;
    s.p = rec.p;
    s.sigma = rec.sigma;
    return s;
}

}  // namespace

VerifyReport verify_run(const std::string& dir) {
    Auditor a;

    // --- manifest + config round trip -------------------------------------
    CheckResult& c_manifest = a.add("manifest");
    SimConfig cfg;
    bool have_cfg = false;
    try {
        const nlohmann::json m = nlohmann::json::parse(read_file(dir + "/manifest.json"));
        cfg = parse_config(m.at("config"));
        const std::string stored_hash = m.at("config_hash").get<std::string>();
        const SimConfig again = parse_config(cfg.canonical);
        if (stored_hash != hash_hex(cfg.hash))
            a.fail(c_manifest, 1.0, 0.0,
                   "manifest config_hash " + stored_hash + " does not match the config (" +
                       hash_hex(cfg.hash) + ")");
        else if (again.canonical_text != cfg.canonical_text)
            a.fail(c_manifest, 1.0, 0.0, "config canonicalization is not idempotent");
        else if (m.at("run").at("nsteps").get<long>() != cfg.nsteps ||
                 m.at("run").at("dt").get<double>() != cfg.dt ||
                 m.at("run").at("snapshot_stride").get<long>() != cfg.snapshot_stride)
            a.fail(c_manifest, 1.0, 0.0,
                   "manifest run block disagrees with the resolved config stepping");
        else {
            a.pass(c_manifest, 0.0, 0.0, hash_hex(cfg.hash));
            have_cfg = true;
        }
    } catch (const std::exception& e) {
        a.fail(c_manifest, 1.0, 0.0, e.what());
    }

    // --- snapshot container ------------------------------------------------
    CheckResult& c_snap = a.add("snapshot_integrity");
    SnapshotSeries snap;
    bool have_snap = false;
    if (have_cfg) {
        try {
            snap = parse_snapshot_bytes(read_file(dir + "/snapshots.bin"));
            if (snap.nx != cfg.nx || snap.ny != cfg.ny || snap.Lx != cfg.Lx ||
                snap.Ly != cfg.Ly)
                a.fail(c_snap, 1.0, 0.0, "snapshot grid does not match the config");
            else {
                const auto want = expected_steps(cfg.nsteps, cfg.snapshot_stride);
                bool schedule_ok = snap.records.size() == want.size();
                if (schedule_ok)
                    for (std::size_t i = 0; i < want.size(); ++i)
                        schedule_ok = schedule_ok && snap.records[i].step == want[i];
                if (!schedule_ok)
                    a.fail(c_snap, double(snap.records.size()), double(want.size()),
                           "record schedule does not match nsteps/stride");
                else {
                    a.pass(c_snap, double(snap.records.size()), double(want.size()),
                           std::to_string(snap.records.size()) + " records");
                    have_snap = true;
                }
            }
        } catch (const std::exception& e) {
            a.fail(c_snap, 1.0, 0.0, e.what());
        }
    } else {
        a.skip(c_snap, "no valid manifest");
    }

    // --- ledger ------------------------------------------------------------
    CheckResult& c_ledger = a.add("ledger_rows");
    LedgerFile led;
    bool have_ledger = false;
    if (have_cfg) {
        try {
            led = parse_ledger_csv_text(read_file(dir + "/ledger.csv"));
            const long want = cfg.nsteps + 1;
            if (static_cast<long>(led.rows.size()) != want)
                a.fail(c_ledger, double(led.rows.size()), double(want),
                       "one ledger row per step plus the initial row expected");
            else {
                a.pass(c_ledger, double(led.rows.size()), double(want));
                have_ledger = true;
            }
        } catch (const std::exception& e) {
            a.fail(c_ledger, 1.0, 0.0, e.what());
        }
    } else {
        a.skip(c_ledger, "no valid manifest");
    }

    // --- hash agreement across artifacts ------------------------------------
    CheckResult& c_hash = a.add("config_hash");
    bool hashes_ok = false;
    if (have_cfg && have_snap && have_ledger) {
        if (snap.config_hash != cfg.hash)
            a.fail(c_hash, 1.0, 0.0,
                   "snapshots.bin carries " + hash_hex(snap.config_hash) + ", config is " +
                       hash_hex(cfg.hash));
        else if (led.config_hash != cfg.hash)
            a.fail(c_hash, 1.0, 0.0,
                   "ledger.csv carries " + hash_hex(led.config_hash) + ", config is " +
                       hash_hex(cfg.hash));
        else {
            a.pass(c_hash, 0.0, 0.0, hash_hex(cfg.hash));
            hashes_ok = true;
        }
    } else {
        a.skip(c_hash, "artifacts unavailable");
    }

    // --- stored-field invariants --------------------------------------------
    CheckResult& c_hooke = a.add("hooke_law");
    CheckResult& c_adm = a.add("admissibility");
    CheckResult& c_kin = a.add("kinematics");
    CheckResult& c_cvx = a.add("convexity");
    if (have_cfg && have_snap && !snap.records.empty()) {
        const Grid g = config_grid(cfg);
        const ElasticitySet<2> K = config_set(cfg);

        double hooke_worst = 0.0;
        double margin_worst = std::numeric_limits<double>::infinity();
        double kin_worst = 0.0;
        double emax = 0.0;
        for (const SnapshotRecord& rec : snap.records) {
            const SymField grad_u = sym_gradient(g, rec.u);
            for (int c = 0; c < g.ncells(); ++c) {
                const SymMat<2> sig = rec.sigma.data[static_cast<std::size_t>(c)];
                const SymMat<2> ee = rec.e.data[static_cast<std::size_t>(c)];
                const SymMat<2> pp = rec.p.data[static_cast<std::size_t>(c)];
                hooke_worst =
                    std::max(hooke_worst, norm(sig - hooke_apply(cfg.hooke, ee)) /
                                              (1.0 + norm(sig)));
                margin_worst = std::min(margin_worst, K.margin_distance(sig));
                kin_worst = std::max(
                    kin_worst,
                    norm(grad_u.data[static_cast<std::size_t>(c)] - (ee + pp)));
                emax = std::max(emax, norm(ee));
            }
        }
        const double adm_tol = -std::max(1e-9, 1e-12 * K.inradius());
        const double kin_tol = 1e-9 * double(std::max<long>(1, cfg.nsteps)) * (1.0 + emax);
        if (hooke_worst <= 1e-12)
            a.pass(c_hooke, hooke_worst, 1e-12);
        else
            a.fail(c_hooke, hooke_worst, 1e-12, "sigma deviates from A e");
        if (margin_worst >= adm_tol)
            a.pass(c_adm, margin_worst, adm_tol);
        else
            a.fail(c_adm, margin_worst, adm_tol, "stress leaves the elasticity set");
        if (kin_worst <= kin_tol)
            a.pass(c_kin, kin_worst, kin_tol);
        else
            a.fail(c_kin, kin_worst, kin_tol, "sym_gradient(u) drifts from e + p");

        // Windowed convexity between consecutive records: H(dp) >= sigma:dp
        // for the end-of-window stress, which any admissible stress satisfies;
        // a post-hoc rescaled sigma breaks it wherever yield happened.
        double cvx_worst = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r + 1 < snap.records.size(); ++r) {
            const SnapshotRecord& b = snap.records[r + 1];
            for (int c = 0; c < g.ncells(); ++c) {
                const SymMat<2> dp = b.p.data[static_cast<std::size_t>(c)] -
                                     snap.records[r].p.data[static_cast<std::size_t>(c)];
                const double gap = K.support(dp) -
                                   ddot(b.sigma.data[static_cast<std::size_t>(c)], dp);
                cvx_worst = std::min(cvx_worst, gap / (1.0 + norm(dp)));
            }
        }
        if (snap.records.size() < 2) cvx_worst = 0.0;
        if (cvx_worst >= -1e-8)
            a.pass(c_cvx, cvx_worst, -1e-8);
        else
            a.fail(c_cvx, cvx_worst, -1e-8,
                   "pointwise H(dp) - sigma:dp went negative; stored stress is "
                   "inconsistent with the plastic increments");
    } else {
        const char* why = "snapshots unavailable";
        a.skip(c_hooke, why);
        a.skip(c_adm, why);
        a.skip(c_kin, why);
        a.skip(c_cvx, why);
    }

    // --- replay-based checks --------------------------------------------
    CheckResult& c_battery = a.add("battery_convexity");
    CheckResult& c_flow = a.add("flow_rule");
    CheckResult& c_audit = a.add("ledger_audit");
    CheckResult& c_replay = a.add("replay");
    if (have_cfg && have_snap && have_ledger && hashes_ok) {
        const Problem pb = config_problem(cfg);
        const State init = record_state(pb.grid, pb.part, snap.records.front());
        const RunOptions opt = config_run_options(cfg);

        try {
            const auto battery = test_battery(pb.grid, pb.part);
            const ConvexityReport cr = convexity_check(pb, init, opt, battery);
            if (cr.worst_asserted >= -1e-8)
                a.pass(c_battery, cr.worst_asserted, -1e-8,
                       std::to_string(battery.size()) + " test functions");
            else
                a.fail(c_battery, cr.worst_asserted, -1e-8,
                       "asserted convexity residual went negative");
        } catch (const std::invalid_argument& e) {
            a.skip(c_battery, e.what());
        }

        const FlowRuleReport fr = flow_rule_residual(pb, init, opt);
        if (fr.max_residual <= 1e-6)
            a.pass(c_flow, fr.max_residual, 1e-6);
        else
            a.fail(c_flow, fr.max_residual, 1e-6, "per-step flow-rule residual too large");

        // Ledger re-audit: the residual column must be the stated combination
        // of the others, and cumulative columns must be nondecreasing.
        double audit_worst = 0.0;
        bool monotone = true;
        const double e0 = led.rows.front().kinetic + led.rows.front().elastic;
        for (std::size_t r = 0; r < led.rows.size(); ++r) {
            const LedgerRow& row = led.rows[r];
            const double recomputed = (row.kinetic + row.elastic - e0) + row.plastic_cum +
                                      row.boundary_psi_cum + row.boundary_flux_cum -
                                      row.work_cum;
            const double scale = 1.0 + std::abs(row.kinetic) + std::abs(row.elastic) +
                                 row.plastic_cum + row.boundary_psi_cum +
                                 row.boundary_flux_cum + std::abs(row.work_cum);
            audit_worst = std::max(audit_worst, std::abs(recomputed - row.residual) / scale);
            if (r > 0) {
                const LedgerRow& prev = led.rows[r - 1];
                monotone = monotone && row.plastic_cum >= prev.plastic_cum &&
                           row.boundary_psi_cum >= prev.boundary_psi_cum &&
                           row.boundary_flux_cum >= prev.boundary_flux_cum &&
                           row.sigma_gap >= prev.sigma_gap &&
                           row.t > prev.t;
            }
        }
        if (audit_worst <= 1e-12 && monotone)
            a.pass(c_audit, audit_worst, 1e-12);
        else
            a.fail(c_audit, audit_worst, 1e-12,
                   monotone ? "residual column is not the stated combination"
                            : "cumulative columns are not monotone");

        // Deterministic replay: re-running from the stored initial record
        // must reproduce both artifacts byte for byte.
        try {
            const Trajectory tr = run(pb, init, opt);
            const std::string led_bytes = ledger_csv_text(cfg.hash, energy_ledger(tr));
            const std::string snap_bytes =
                snapshot_bytes(pb.grid, cfg.hash, trajectory_records(tr));
            const bool led_same = led_bytes == read_file(dir + "/ledger.csv");
            const bool snap_same = snap_bytes == read_file(dir + "/snapshots.bin");
            if (led_same && snap_same)
                a.pass(c_replay, 0.0, 0.0, "byte-identical ledger and snapshots");
            else
                a.fail(c_replay, 1.0, 0.0,
                       std::string("replay differs from stored ") +
                           (!led_same && !snap_same
                                ? "ledger and snapshots"
                                : (!led_same ? "ledger" : "snapshots")));
        } catch (const std::exception& e) {
            a.fail(c_replay, 1.0, 0.0, std::string("replay aborted: ") + e.what());
        }
    } else {
        const char* why = hashes_ok ? "artifacts unavailable" : "config hash mismatch";
        a.skip(c_battery, why);
        a.skip(c_flow, why);
        a.skip(c_audit, why);
        a.skip(c_replay, why);
    }

    a.rep.ok = std::none_of(a.rep.checks.begin(), a.rep.checks.end(),
                            [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
    return a.rep;
}

std::string verify_text(const VerifyReport& rep) {
    std::ostringstream os;
    for (const CheckResult& c : rep.checks) {
        const char* tag = c.status == CheckStatus::Pass
                              ? "PASS"
                              : (c.status == CheckStatus::Fail ? "FAIL" : "SKIP");
        os << tag << "  " << c.name;
        for (std::size_t pad = c.name.size(); pad < 20; ++pad) os << ' ';
        if (c.status != CheckStatus::Skip)
            os << " measured=" << format_double(c.measured)
               << " tolerance=" << format_double(c.tolerance);
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << '\n';
    }
    os << (rep.ok ? "VERIFY PASS" : "VERIFY FAIL") << '\n';
    return os.str();
}

std::string verify_json(const VerifyReport& rep) {
    nlohmann::json j;
    j["ok"] = rep.ok;
    j["checks"] = nlohmann::json::array();
    for (const CheckResult& c : rep.checks)
        j["checks"].push_back(
            {{"name", c.name},
             {"status", c.status == CheckStatus::Pass
                            ? "pass"
                            : (c.status == CheckStatus::Fail ? "fail" : "skip")},
             {"measured", c.measured},
             {"tolerance", c.tolerance},
             {"detail", c.detail}});
    return j.dump(2) + "\n";
}

}  // namespace plastlab
