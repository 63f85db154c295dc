#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "helpers.hpp"
#include "plastlab/config.hpp"
#include "plastlab/io.hpp"
#include "plastlab/verify.hpp"

using namespace plastlab;
using namespace plastlab::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Every case works under its own subdirectory of this scratch root (the
// working directory is the build tree when run through ctest).
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path("cli_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int rc = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(PLASTLAB_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.rc = (status == -1) ? -1 : WEXITSTATUS(status);
    r.out = read_file(out.string());
    r.err = read_file(err.string());
    return r;
}

json base_config(const std::string& out_dir) {
    return json{
        {"grid", {{"Lx", 1.0}, {"Ly", 1.0}, {"nx", 24}, {"ny", 24}}},
        {"hooke", {{"lambda", 1.0}, {"mu", 1.0}}},
        {"elasticity_set", {{"kind", "deviatoric_cylinder"}, {"k", 0.05}}},
        {"boundary",
         {{"bottom", json::array({{{"label", "dirichlet"}, {"from", 0.0}, {"to", 1.0}}})},
          {"right", json::array({{{"label", "neumann"}, {"from", 0.0}, {"to", 1.0}}})},
          {"top", json::array({{{"label", "neumann"}, {"from", 0.0}, {"to", 1.0}}})},
          {"left", json::array({{{"label", "neumann"}, {"from", 0.0}, {"to", 1.0}}})}}},
        {"bc_mode", {{"kind", "dissipative"}, {"lambda", 100.0}}},
        {"time", {{"T", 0.2}, {"cfl", 0.5}, {"snapshot_stride", 6}}},
        {"initial",
         {{"family", "gaussian_velocity"},
          {"center", {0.5, 0.5}},
          {"radius", 0.1},
          {"direction", {0.0, -1.0}},
          {"amplitude", 0.5},
          {"r_margin", 0.02}}},
        {"body_force", {{"kind", "none"}}},
        {"output", {{"directory", out_dir}}}};
}

std::string write_config(const fs::path& dir, const json& doc,
                         const std::string& name = "config.json") {
    const fs::path p = dir / name;
    write_file(p.string(), doc.dump(2) + "\n");
    return p.string();
}

}  // namespace

TEST_CASE("the content hash matches the published FNV-1a test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hash_hex(0xcbf29ce484222325ULL) == "0xcbf29ce484222325");
    CHECK(hash_hex(0x1ULL) == "0x0000000000000001");
}

TEST_CASE("a full config parses into resolved run parameters") {
    json doc = base_config("out/run");
    doc["time"] = {{"T", 0.1}, {"dt", 0.03}};
    const SimConfig cfg = parse_config(doc);
    CHECK(cfg.nx == 24);
    CHECK(cfg.hooke.mu == 1.0);
    CHECK(cfg.nsteps == 4);  // ceil(0.1 / 0.03)
    CHECK(cfg.dt == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(cfg.snapshot_stride == 0);
    CHECK(cfg.r_margin == 0.02);
    CHECK(cfg.out_dir == "out/run");
    CHECK(cfg.hash != 0);

    // Exact division needs no rounding adjustment.
    doc["time"] = {{"T", 0.1}, {"dt", 0.025}};
    CHECK(parse_config(doc).nsteps == 4);

    // Canonicalization is idempotent, so the manifest round trip preserves
    // both the effective parameters and the hash.
    const SimConfig again = parse_config(cfg.canonical);
    CHECK(again.canonical_text == cfg.canonical_text);
    CHECK(again.hash == cfg.hash);
    CHECK(again.nsteps == cfg.nsteps);
    CHECK(again.dt == cfg.dt);

    // r_margin defaults when absent.
    json plain = base_config("out/run");
    plain["initial"].erase("r_margin");
    CHECK(parse_config(plain).r_margin == 0.5);
}

TEST_CASE("config validation names the offending key") {
    auto expect_error = [](json doc, const std::string& fragment) {
        CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains(fragment.c_str()),
                             ConfigError);
    };
    json doc = base_config("out");
    doc["hooke"].erase("mu");
    expect_error(doc, "hooke.mu");

    doc = base_config("out");
    doc.erase("grid");
    expect_error(doc, "grid");

    doc = base_config("out");
    doc["grid"]["nz"] = 4;
    expect_error(doc, "grid.nz");

    doc = base_config("out");
    doc["grid"]["nx"] = 0;
    expect_error(doc, "grid.nx");

    doc = base_config("out");
    doc["boundary"]["top"][0]["label"] = "free";
    expect_error(doc, "boundary.top[0].label");

    doc = base_config("out");
    doc["boundary"]["left"] = json::array(
        {{{"label", "neumann"}, {"from", 0.0}, {"to", 0.6}},
         {{"label", "dirichlet"}, {"from", 0.5}, {"to", 1.0}}});
    expect_error(doc, "boundary.left");

    doc = base_config("out");
    doc["boundary"]["right"] = json::array({{{"label", "neumann"}, {"from", 0.0}, {"to", 0.9}}});
    expect_error(doc, "boundary.right");

    doc = base_config("out");
    doc["time"] = {{"T", 0.2}, {"cfl", 0.5}, {"dt", 0.01}};
    expect_error(doc, "time.cfl");

    doc = base_config("out");
    doc["time"] = {{"T", 0.2}};
    expect_error(doc, "time.dt");

    doc = base_config("out");
    doc["initial"]["family"] = "vortex";
    expect_error(doc, "initial.family");

    doc = base_config("out");
    doc["elasticity_set"] = {{"kind", "ball"}, {"radius", -1.0}};
    expect_error(doc, "elasticity_set.radius");

    doc = base_config("out");
    doc["bc_mode"] = {{"kind", "dissipative"}};
    expect_error(doc, "bc_mode.lambda");

    doc = base_config("out");
    doc.erase("output");
    expect_error(doc, "output");

    CHECK_THROWS_WITH_AS(parse_config_text("{not json"), doctest::Contains("invalid JSON"),
                         ConfigError);
}

TEST_CASE("snapshot containers round-trip bit for bit and reject corruption") {
    const Grid g = Grid::make(1.0, 1.0, 5, 5);
    std::vector<SnapshotRecord> recs(2);
    for (int k = 0; k < 2; ++k) {
        SnapshotRecord& r = recs[static_cast<std::size_t>(k)];
        r.step = 7 * k;
        r.t = 0.125 * k;
        r.u = VectorField(g);
        r.v = VectorField(g);
        r.e = SymField(g);
        r.p = SymField(g);
        r.sigma = SymField(g);
        for (auto& v : r.u.data) v = random_vec<2>(1.0);
        for (auto& v : r.v.data) v = random_vec<2>(1.0);
        for (auto& m : r.e.data) m = random_sym<2>(1.0);
        for (auto& m : r.p.data) m = random_sym<2>(1.0);
        for (auto& m : r.sigma.data) m = random_sym<2>(1.0);
    }
    const std::string bytes = snapshot_bytes(g, 0xdeadbeefULL, recs);
    const SnapshotSeries s = parse_snapshot_bytes(bytes);
    CHECK(s.config_hash == 0xdeadbeefULL);
    CHECK(s.nx == 5);
    CHECK(s.records.size() == 2);
    for (int k = 0; k < 2; ++k) {
        const auto& a = recs[static_cast<std::size_t>(k)];
        const auto& b = s.records[static_cast<std::size_t>(k)];
        CHECK(a.step == b.step);
        CHECK(a.t == b.t);
        for (std::size_t n = 0; n < a.u.data.size(); ++n) {
            CHECK(a.u.data[n][0] == b.u.data[n][0]);
            CHECK(a.v.data[n][1] == b.v.data[n][1]);
        }
        for (std::size_t c = 0; c < a.e.data.size(); ++c) {
            CHECK(a.e.data[c](0, 1) == b.e.data[c](0, 1));
            CHECK(a.p.data[c](0, 0) == b.p.data[c](0, 0));
            CHECK(a.sigma.data[c](1, 1) == b.sigma.data[c](1, 1));
        }
    }

    CHECK_THROWS_WITH_AS(parse_snapshot_bytes(bytes.substr(0, bytes.size() - 40)),
                         doctest::Contains("integrity"), IoError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(parse_snapshot_bytes(bad), doctest::Contains("magic"), IoError);
    CHECK_THROWS_WITH_AS(parse_snapshot_bytes(bytes + "zz"), doctest::Contains("trailing"),
                         IoError);
}

TEST_CASE("ledger CSV round-trips exact doubles under the hash banner") {
    std::vector<LedgerRow> rows;
    rows.push_back(LedgerRow{0.0, 1.0 / 3.0, 2.0e-17, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    rows.push_back(LedgerRow{0.1, 0.3333333333333333, 1e300, 1e-300, 0.1, 0.2, -0.5,
                             -3.0e-9, 4.25});
    const std::string text = ledger_csv_text(0xabcULL, rows);
    const LedgerFile f = parse_ledger_csv_text(text);
    CHECK(f.config_hash == 0xabcULL);
    REQUIRE(f.rows.size() == 2);
    CHECK(f.rows[1].kinetic == rows[1].kinetic);
    CHECK(f.rows[1].elastic == rows[1].elastic);
    CHECK(f.rows[1].plastic_cum == rows[1].plastic_cum);
    CHECK(f.rows[1].residual == rows[1].residual);
    CHECK(f.rows[0].kinetic == 1.0 / 3.0);

    CHECK_THROWS_WITH_AS(parse_ledger_csv_text("t,kinetic\n"), doctest::Contains("config_hash"),
                         IoError);
    CHECK_THROWS_WITH_AS(parse_ledger_csv_text("# config_hash 0xabc\nbad header\n"),
                         doctest::Contains("header"), IoError);
    const std::string broken = text + "1,2,3\n";
    CHECK_THROWS_WITH_AS(parse_ledger_csv_text(broken), doctest::Contains("malformed"), IoError);
}

TEST_CASE("simulate writes a complete, deterministic run directory") {
    const fs::path dir = scratch("simulate");
    const std::string out = (dir / "run").string();
    const std::string cfg_path = write_config(dir, base_config(out));

    const CliResult r1 = run_cli("simulate " + cfg_path, dir);
    CAPTURE(r1.err);
    REQUIRE(r1.rc == 0);
    CHECK(r1.out.find("wrote " + out) != std::string::npos);

    const SimConfig cfg = load_config(cfg_path);
    const LedgerFile led = parse_ledger_csv_text(read_file(out + "/ledger.csv"));
    CHECK(static_cast<long>(led.rows.size()) == cfg.nsteps + 1);
    CHECK(led.config_hash == cfg.hash);
    const SnapshotSeries snap = parse_snapshot_bytes(read_file(out + "/snapshots.bin"));
    CHECK(snap.config_hash == cfg.hash);
    CHECK(snap.records.front().step == 0);
    CHECK(snap.records.back().step == cfg.nsteps);
    const json manifest = json::parse(read_file(out + "/manifest.json"));
    CHECK(manifest["config_hash"] == hash_hex(cfg.hash));
    CHECK(manifest["run"]["nsteps"] == cfg.nsteps);

    // Rerunning the same config reproduces every artifact byte for byte.
    const std::string led1 = read_file(out + "/ledger.csv");
    const std::string snap1 = read_file(out + "/snapshots.bin");
    const std::string man1 = read_file(out + "/manifest.json");
    const CliResult r2 = run_cli("simulate " + cfg_path, dir);
    REQUIRE(r2.rc == 0);
    CHECK(read_file(out + "/ledger.csv") == led1);
    CHECK(read_file(out + "/snapshots.bin") == snap1);
    CHECK(read_file(out + "/manifest.json") == man1);
}

TEST_CASE("simulate rejects a config with a missing key, naming it") {
    const fs::path dir = scratch("missing-key");
    json doc = base_config((dir / "run").string());
    doc["hooke"].erase("mu");
    const std::string cfg_path = write_config(dir, doc);
    const CliResult r = run_cli("simulate " + cfg_path, dir);
    CHECK(r.rc == 2);
    CHECK(r.err.find("hooke.mu") != std::string::npos);
}

TEST_CASE("simulate honors --out and --snapshot-stride overrides") {
    const fs::path dir = scratch("overrides");
    const std::string cfg_path = write_config(dir, base_config((dir / "ignored").string()));
    const std::string out = (dir / "actual").string();
    const CliResult r =
        run_cli("simulate " + cfg_path + " --out " + out + " --snapshot-stride 0", dir);
    REQUIRE(r.rc == 0);
    CHECK(fs::exists(out + "/manifest.json"));
    CHECK_FALSE(fs::exists((dir / "ignored").string() + "/manifest.json"));
    // stride 0 keeps only the initial and final records
    const SnapshotSeries snap = parse_snapshot_bytes(read_file(out + "/snapshots.bin"));
    CHECK(snap.records.size() == 2);
    const json manifest = json::parse(read_file(out + "/manifest.json"));
    CHECK(manifest["config"]["output"]["directory"] == out);
    CHECK(manifest["config"]["time"]["snapshot_stride"] == 0);
}

TEST_CASE("simulate reports the stability guard as a runtime failure") {
    const fs::path dir = scratch("guard");
    json doc = base_config((dir / "run").string());
    doc["elasticity_set"] = {{"kind", "ball"}, {"radius", 1e6}};
    doc["initial"] = {{"family", "standing_wave"}, {"amplitude", 1.0}, {"mode", 1}};
    doc["time"] = {{"T", 2.0}, {"dt", 0.1}};
    const std::string cfg_path = write_config(dir, doc);
    const CliResult r = run_cli("simulate " + cfg_path, dir);
    CHECK(r.rc == 1);
    CHECK(r.err.find("blow-up") != std::string::npos);
}

TEST_CASE("verify passes a fresh run and fails doctored or corrupt artifacts") {
    const fs::path dir = scratch("verify");
    const std::string out = (dir / "run").string();
    const std::string cfg_path = write_config(dir, base_config(out));
    REQUIRE(run_cli("simulate " + cfg_path, dir).rc == 0);

    const CliResult ok = run_cli("verify " + out, dir);
    CAPTURE(ok.out);
    CHECK(ok.rc == 0);
    CHECK(ok.out.find("VERIFY PASS") != std::string::npos);
    CHECK(fs::exists(out + "/verify_report.json"));
    const json rep = json::parse(read_file(out + "/verify_report.json"));
    CHECK(rep["ok"] == true);

    // Scaling the stored stress must trip the convexity audit (among others).
    SUBCASE("stress doubled post hoc") {
        SnapshotSeries snap = parse_snapshot_bytes(read_file(out + "/snapshots.bin"));
        for (SnapshotRecord& rec : snap.records)
            for (auto& m : rec.sigma.data) m *= 2.0;
        const Grid g = Grid::make(snap.Lx, snap.Ly, static_cast<int>(snap.nx),
                                  static_cast<int>(snap.ny));
        write_file(out + "/snapshots.bin", snapshot_bytes(g, snap.config_hash, snap.records));
        const CliResult r = run_cli("verify " + out, dir);
        CHECK(r.rc == 1);
        CHECK(r.out.find("VERIFY FAIL") != std::string::npos);
        CHECK(r.out.find("FAIL  convexity") != std::string::npos);
    }

    SUBCASE("snapshot file truncated") {
        const std::string bytes = read_file(out + "/snapshots.bin");
        write_file(out + "/snapshots.bin", bytes.substr(0, bytes.size() - 128));
        const CliResult r = run_cli("verify " + out, dir);
        CHECK(r.rc == 1);
        CHECK(r.out.find("integrity") != std::string::npos);
    }

    SUBCASE("mismatched config hash is refused") {
        std::string led = read_file(out + "/ledger.csv");
        led.replace(led.find("0x") + 2, 4, "0000");
        write_file(out + "/ledger.csv", led);
        const CliResult r = run_cli("verify " + out, dir);
        CHECK(r.rc == 1);
        CHECK(r.out.find("FAIL  config_hash") != std::string::npos);
        // Replay-based checks must not run against unverifiable artifacts.
        CHECK(r.out.find("SKIP  replay") != std::string::npos);
    }

    SUBCASE("missing manifest") {
        fs::remove(out + "/manifest.json");
        const CliResult r = run_cli("verify " + out, dir);
        CHECK(r.rc == 1);
        CHECK(r.out.find("FAIL  manifest") != std::string::npos);
    }
}

TEST_CASE("sweep writes member directories and the decay report") {
    const fs::path dir = scratch("sweep");
    const std::string out = (dir / "sw").string();
    json doc = base_config(out);
    doc["elasticity_set"] = {{"kind", "ball"}, {"radius", 1.0}};
    doc["grid"] = {{"Lx", 1.0}, {"Ly", 1.0}, {"nx", 16}, {"ny", 16}};
    doc["time"] = {{"T", 0.15}, {"cfl", 0.5}};
    doc["initial"] = {
        {"family", "sum"},
        {"parts",
         json::array({{{"family", "gaussian_displacement"},
                       {"center", {0.5, 0.12}},
                       {"radius", 0.045},
                       {"direction", {0.6, 0.8}},
                       {"amplitude", 0.005}},
                      {{"family", "gaussian_velocity"},
                       {"center", {0.5, 0.95}},
                       {"radius", 0.045},
                       {"direction", {1.0, 0.0}},
                       {"amplitude", 0.05}}})},
        {"r_margin", 0.5}};
    const std::string cfg_path = write_config(dir, doc);

    const CliResult r = run_cli("sweep " + cfg_path + " --lambdas 10,100 --workers 2", dir);
    CAPTURE(r.err);
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("flux slope") != std::string::npos);
    CHECK(fs::exists(out + "/lambda_10/ledger.csv"));
    CHECK(fs::exists(out + "/lambda_100/config.json"));
    CHECK(fs::exists(out + "/limit/ledger.csv"));

    const json rep = json::parse(read_file(out + "/sweep_report.json"));
    CHECK(rep["entries"].size() == 3);
    CHECK(rep["flux_slope"].get<double>() < 0.0);
    CHECK(rep["entries"][2]["is_limit"] == true);

    // Member artifacts carry the member's own config hash.
    const json member = json::parse(read_file(out + "/lambda_10/config.json"));
    CHECK(member["config"]["bc_mode"]["lambda"] == 10.0);
    const LedgerFile led = parse_ledger_csv_text(read_file(out + "/lambda_10/ledger.csv"));
    CHECK(hash_hex(led.config_hash) == member["config_hash"].get<std::string>());

    const std::string csv = read_file(out + "/sweep.csv");
    CHECK(csv.find("lambda,neumann_flux") != std::string::npos);
    CHECK(csv.find("\nlimit,") != std::string::npos);

    // A single member is a usage error; a failing member names itself.
    const CliResult usage = run_cli("sweep " + cfg_path + " --lambdas 10", dir);
    CHECK(usage.rc == 2);
    CHECK(usage.err.find("at least two") != std::string::npos);

    const CliResult bad = run_cli("sweep " + cfg_path + " --lambdas 1e-9,10", dir);
    CHECK(bad.rc == 1);
    CHECK(bad.err.find("lambda=1e-09") != std::string::npos);
}

TEST_CASE("make-initial emits the compatible state and its certificate") {
    const fs::path dir = scratch("make-initial");
    const std::string out = (dir / "mi").string();
    json doc = base_config(out);
    doc["elasticity_set"] = {{"kind", "ball"}, {"radius", 1.0}};
    doc["initial"] = {{"family", "gaussian_velocity"},
                      {"center", {0.5, 0.95}},
                      {"radius", 0.045},
                      {"direction", {1.0, 0.0}},
                      {"amplitude", 0.05},
                      {"r_margin", 0.5}};
    const std::string cfg_path = write_config(dir, doc);

    const CliResult r = run_cli("make-initial " + cfg_path + " --lambda 50", dir);
    CAPTURE(r.err);
    REQUIRE(r.rc == 0);
    const json rep = json::parse(read_file(out + "/make_initial.json"));
    CHECK(rep["lambda"] == 50.0);
    CHECK(rep["compatibility_residual_max"].get<double>() <= 1e-10);
    CHECK(rep["ez0_max"].get<double>() > 0.0);

    const SnapshotSeries s = parse_snapshot_bytes(read_file(out + "/initial_state.bin"));
    REQUIRE(s.records.size() == 1);
    CHECK(s.records[0].step == 0);

    // Below the admissible boundary weight the margin guard must refuse.
    const double lambda_min = rep["lambda_min"].get<double>();
    std::ostringstream low;
    low << "make-initial " << cfg_path << " --lambda " << (0.5 * lambda_min);
    const CliResult bad = run_cli(low.str(), dir);
    CHECK(bad.rc == 1);
    CHECK(bad.err.find("margin") != std::string::npos);
}
