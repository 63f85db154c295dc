// Command-line driver: run one simulation, sweep the boundary weight,
// audit a finished run directory, or build compatible initial data.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "plastlab/analysis.hpp"
#include "plastlab/config.hpp"
#include "plastlab/initial_data.hpp"
#include "plastlab/io.hpp"
#include "plastlab/verify.hpp"

namespace {

using namespace plastlab;

nlohmann::json load_doc(const std::string& path) {
    std::string bytes;
    try {
        bytes = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    try {
        return nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }
}

SimConfig load_with_overrides(const std::string& path, const std::string& out_override,
                              long stride_override) {
    nlohmann::json doc = load_doc(path);
    if (!out_override.empty()) doc["output"]["directory"] = out_override;
    if (stride_override >= 0) doc["time"]["snapshot_stride"] = stride_override;
    return parse_config(doc);
}

std::string trim_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

int cmd_simulate(const std::string& config_path, const std::string& out_override,
                 long stride_override) {
    const SimConfig cfg = load_with_overrides(config_path, out_override, stride_override);
    const Problem pb = config_problem(cfg);
    const State init = make_state(pb.grid, pb.part, config_initial(cfg, pb.grid));
    const Trajectory tr = run(pb, init, config_run_options(cfg));
    write_run_directory(cfg.out_dir, cfg, tr);
    const auto rows = energy_ledger(tr);
    std::cout << "wrote " << cfg.out_dir << ": " << cfg.nsteps << " steps, dt "
              << format_double(cfg.dt) << ", " << tr.snapshots.size()
              << " snapshot records, " << rows.size() << " ledger rows, config "
              << hash_hex(cfg.hash) << "\n";
    const LedgerRow& last = rows.back();
    std::cout << "final: kinetic " << format_double(last.kinetic) << ", elastic "
              << format_double(last.elastic) << ", plastic_cum "
              << format_double(last.plastic_cum) << ", residual "
              << format_double(last.residual) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, std::vector<double> lambdas, int workers,
              const std::string& out_override, long stride_override) {
    if (lambdas.size() < 2) {
        std::cerr << "error: sweep requires at least two --lambdas values\n";
        return 2;
    }
    const SimConfig cfg = load_with_overrides(config_path, out_override, stride_override);
    const Grid g = config_grid(cfg);
    SweepScenario sc{g,
                     config_partition(cfg, g),
                     cfg.hooke,
                     config_set(cfg),
                     config_initial(cfg, g),
                     cfg.r_margin,
                     config_body_force(cfg),
                     config_run_options(cfg)};
    const SweepReport rep = lambda_sweep(sc, lambdas, workers);

    // Per-member directories: the member's effective config and its ledger.
    auto write_member = [&](const SweepEntry& e, const std::string& name,
                            const nlohmann::json& mode) {
        nlohmann::json doc = cfg.canonical;
        doc["bc_mode"] = mode;
        doc["output"]["directory"] = cfg.out_dir + "/" + name;
        const SimConfig mcfg = parse_config(doc);
        nlohmann::json wrapper{{"config", mcfg.canonical},
                               {"config_hash", hash_hex(mcfg.hash)}};
        write_file(mcfg.out_dir + "/config.json", wrapper.dump(2) + "\n");
        write_file(mcfg.out_dir + "/ledger.csv", ledger_csv_text(mcfg.hash, e.ledger));
    };
    for (const SweepEntry& e : rep.entries)
        write_member(e, "lambda_" + trim_number(e.lambda),
                     {{"kind", "dissipative"}, {"lambda", e.lambda}});
    write_member(rep.limit_entry, "limit",
                 {{"kind", "limit"}, {"lambda_ref", lambdas.back()}});

    // Sweep summary: CSV row per member plus the fitted decay data.
    std::string csv = "# config_hash " + hash_hex(cfg.hash) + "\n";
    csv += "lambda,neumann_flux,psi_total,flux_total,plastic_total,kinetic_final,"
           "elastic_final,sigma_gap_final\n";
    auto csv_row = [&](const SweepEntry& e, const std::string& lam) {
        csv += lam;
        for (const double v : {e.neumann_flux, e.psi_total, e.flux_total, e.plastic_total,
                               e.kinetic_final, e.elastic_final, e.sigma_gap_final})
            csv += "," + format_double(v);
        csv += "\n";
    };
    for (const SweepEntry& e : rep.entries) csv_row(e, format_double(e.lambda));
    csv_row(rep.limit_entry, "limit");
    write_file(cfg.out_dir + "/sweep.csv", csv);

    nlohmann::json j;
    j["config_hash"] = hash_hex(cfg.hash);
    j["lambdas"] = lambdas;
    j["flux_slope"] = rep.flux_slope;
    j["successive_diff"] = rep.successive_diff;
    j["limit_diff"] = rep.limit_diff;
    j["entries"] = nlohmann::json::array();
    auto entry_json = [](const SweepEntry& e, bool is_limit) {
        return nlohmann::json{{"lambda", e.lambda},
                              {"is_limit", is_limit},
                              {"neumann_flux", e.neumann_flux},
                              {"psi_total", e.psi_total},
                              {"flux_total", e.flux_total},
                              {"plastic_total", e.plastic_total},
                              {"kinetic_final", e.kinetic_final},
                              {"elastic_final", e.elastic_final},
                              {"sigma_gap_final", e.sigma_gap_final}};
    };
    for (const SweepEntry& e : rep.entries) j["entries"].push_back(entry_json(e, false));
    j["entries"].push_back(entry_json(rep.limit_entry, true));
    write_file(cfg.out_dir + "/sweep_report.json", j.dump(2) + "\n");

    std::cout << "lambda        neumann_flux\n";
    for (const SweepEntry& e : rep.entries)
        std::cout << format_double(e.lambda) << "  " << format_double(e.neumann_flux)
                  << "\n";
    std::cout << "limit  (hard constraint)\n";
    std::cout << "flux slope " << format_double(rep.flux_slope) << ", limit_diff "
              << format_double(rep.limit_diff) << "\n";
    std::cout << "wrote " << cfg.out_dir << "/sweep.csv and sweep_report.json\n";
    return 0;
}

int cmd_verify(const std::string& dir) {
    const VerifyReport rep = verify_run(dir);
    std::cout << verify_text(rep);
    write_file(dir + "/verify_report.json", verify_json(rep));
    return rep.ok ? 0 : 1;
}

int cmd_make_initial(const std::string& config_path, double lambda,
                     const std::string& out_override) {
    const SimConfig cfg = load_with_overrides(config_path, out_override, -1);
    const Grid g = config_grid(cfg);
    const BoundaryPartition part = config_partition(cfg, g);
    const ElasticitySet<2> K = config_set(cfg);
    const InitialState base = config_initial(cfg, g);
    const CompatibleData cd = make_initial(g, part, cfg.hooke, K, base, lambda, cfg.r_margin);
    const InitialState corrected = apply_compatible_correction(g, cfg.hooke, base, cd, lambda);
    const std::vector<double> res = compatibility_residual(part, cd, lambda, base.v);
    double worst = 0.0;
    for (const double r : res) worst = std::max(worst, r);

    SnapshotRecord rec{0,          0.0,         corrected.u, corrected.v,
                       corrected.e, corrected.p, corrected.sigma};
    write_file(cfg.out_dir + "/initial_state.bin", snapshot_bytes(g, cfg.hash, {rec}));
    nlohmann::json j{{"config_hash", hash_hex(cfg.hash)},
                     {"lambda", lambda},
                     {"r_margin", cfg.r_margin},
                     {"ez0_max", cd.ez0_max},
                     {"lambda_min", cd.ez0_max / cfg.r_margin},
                     {"compatibility_residual_max", worst}};
    write_file(cfg.out_dir + "/make_initial.json", j.dump(2) + "\n");
    std::cout << "compatible data at lambda " << format_double(lambda)
              << ": max residual " << format_double(worst) << ", ez0_max "
              << format_double(cd.ez0_max) << ", smallest admissible lambda "
              << format_double(cd.ez0_max / cfg.r_margin) << "\n";
    std::cout << "wrote " << cfg.out_dir << "/initial_state.bin and make_initial.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic perfect plasticity with dissipative boundary conditions"};
    app.require_subcommand(1);

    std::string config_path, run_dir, out_override;
    long stride_override = -1;
    std::vector<double> lambdas;
    int workers = 1;
    double lambda = 0.0;

    CLI::App* sim = app.add_subcommand("simulate", "run one simulation from a JSON config");
    sim->add_option("config", config_path, "path to the JSON config")->required();
    sim->add_option("--out", out_override, "override output.directory");
    sim->add_option("--snapshot-stride", stride_override, "override time.snapshot_stride");

    CLI::App* swp =
        app.add_subcommand("sweep", "run the boundary-weight sweep plus the hard-constraint member");
    swp->add_option("config", config_path, "path to the JSON config")->required();
    swp->add_option("--lambdas", lambdas, "comma-separated boundary weights (>= 2, increasing)")
        ->required()
        ->delimiter(',');
    swp->add_option("--workers", workers, "max concurrent sweep members")
        ->check(CLI::PositiveNumber);
    swp->add_option("--out", out_override, "override output.directory");
    swp->add_option("--snapshot-stride", stride_override, "override time.snapshot_stride");

    CLI::App* ver = app.add_subcommand("verify", "audit a finished run directory");
    ver->add_option("dir", run_dir, "run directory with manifest.json")->required();

    CLI::App* mki =
        app.add_subcommand("make-initial", "build boundary-compatible initial data");
    mki->add_option("config", config_path, "path to the JSON config")->required();
    mki->add_option("--lambda", lambda, "boundary weight the data is compatible with")
        ->required()
        ->check(CLI::PositiveNumber);
    mki->add_option("--out", out_override, "override output.directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_override, stride_override);
        if (swp->parsed())
            return cmd_sweep(config_path, lambdas, workers, out_override, stride_override);
        if (ver->parsed()) return cmd_verify(run_dir);
        return cmd_make_initial(config_path, lambda, out_override);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
