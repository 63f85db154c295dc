#include "plastlab/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace plastlab {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'S', 'N', 'A', 'P', '0', '1'};
constexpr const char* kLedgerHeader =
    "t,kinetic,elastic,plastic_cum,boundary_psi_cum,boundary_flux_cum,work_cum,"
    "residual,sigma_gap";
constexpr const char* kProgramVersion = "plastlab 0.1.0";

[[noreturn]] void integrity_fail(const std::string& what) {
    throw IoError("snapshot integrity error: " + what);
}

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}
void put_i64(std::string& out, std::int64_t v) { put_bytes(out, &v, sizeof v); }
void put_u64(std::string& out, std::uint64_t v) { put_bytes(out, &v, sizeof v); }
void put_f64(std::string& out, double v) { put_bytes(out, &v, sizeof v); }

struct Reader {
    const char* p;
    std::size_t left;
    void take(void* dst, std::size_t n) {
        if (left < n) integrity_fail("file truncated");
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
    }
    std::int64_t i64() {
        std::int64_t v;
        take(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        take(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        take(&v, sizeof v);
        return v;
    }
};

void put_vector_field(std::string& out, const VectorField& f) {
    for (const Vec<2>& v : f.data) {
        put_f64(out, v[0]);
        put_f64(out, v[1]);
    }
}

void put_sym_field(std::string& out, const SymField& f) {
    for (const SymMat<2>& m : f.data) {
        put_f64(out, m(0, 0));
        put_f64(out, m(1, 1));
        put_f64(out, m(0, 1));
    }
}

void take_vector_field(Reader& r, VectorField& f) {
    for (Vec<2>& v : f.data) {
        v[0] = r.f64();
        v[1] = r.f64();
    }
}

void take_sym_field(Reader& r, SymField& f) {
    for (SymMat<2>& m : f.data) {
        const double xx = r.f64();
        const double yy = r.f64();
        const double xy = r.f64();
        m.set(0, 0, xx);
        m.set(1, 1, yy);
        m.set(0, 1, xy);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::string snapshot_bytes(const Grid& g, std::uint64_t config_hash,
                           const std::vector<SnapshotRecord>& records) {
    std::string out;
    const std::size_t per_record =
        sizeof(std::int64_t) + sizeof(double) +
        static_cast<std::size_t>(g.nnodes()) * 2 * 2 * sizeof(double) +
        static_cast<std::size_t>(g.ncells()) * 3 * 3 * sizeof(double);
    out.reserve(8 + 8 + 16 + 16 + 8 + records.size() * per_record);
    put_bytes(out, kMagic, sizeof kMagic);
    put_u64(out, config_hash);
    put_i64(out, g.nx);
    put_i64(out, g.ny);
    put_f64(out, g.Lx);
    put_f64(out, g.Ly);
    put_i64(out, static_cast<std::int64_t>(records.size()));
    for (const SnapshotRecord& rec : records) {
        put_i64(out, rec.step);
        put_f64(out, rec.t);
        put_vector_field(out, rec.u);
        put_vector_field(out, rec.v);
        put_sym_field(out, rec.e);
        put_sym_field(out, rec.p);
        put_sym_field(out, rec.sigma);
    }
    return out;
}

SnapshotSeries parse_snapshot_bytes(std::string_view bytes) {
    Reader r{bytes.data(), bytes.size()};
    char magic[8];
    r.take(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        integrity_fail("bad magic (not a PLSNAP01 snapshot file)");
    SnapshotSeries s;
    s.config_hash = r.u64();
    s.nx = r.i64();
    s.ny = r.i64();
    s.Lx = r.f64();
    s.Ly = r.f64();
    if (s.nx < 1 || s.nx > 4096 || s.ny < 1 || s.ny > 4096 || !(s.Lx > 0.0) || !(s.Ly > 0.0))
        integrity_fail("header grid dimensions out of range");
    const std::int64_t count = r.i64();
    if (count < 0) integrity_fail("negative record count");
    const Grid g = Grid::make(s.Lx, s.Ly, static_cast<int>(s.nx), static_cast<int>(s.ny));
    s.records.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        SnapshotRecord rec;
        rec.step = r.i64();
        rec.t = r.f64();
        rec.u = VectorField(g);
        rec.v = VectorField(g);
        rec.e = SymField(g);
        rec.p = SymField(g);
        rec.sigma = SymField(g);
        take_vector_field(r, rec.u);
        take_vector_field(r, rec.v);
        take_sym_field(r, rec.e);
        take_sym_field(r, rec.p);
        take_sym_field(r, rec.sigma);
        s.records.push_back(std::move(rec));
    }
    if (r.left != 0) integrity_fail("trailing bytes after the last record");
    return s;
}

std::vector<SnapshotRecord> trajectory_records(const Trajectory& tr) {
    std::vector<SnapshotRecord> out;
    out.reserve(tr.snapshots.size());
    for (const auto& [step, state] : tr.snapshots)
        out.push_back(SnapshotRecord{step, state.t, state.u, state.v, state.e, state.p,
                                     state.sigma});
    return out;
}

std::string ledger_csv_text(std::uint64_t config_hash, const std::vector<LedgerRow>& rows) {
    std::string out = "# config_hash " + hash_hex(config_hash) + "\n";
    out += kLedgerHeader;
    out += '\n';
    for (const LedgerRow& r : rows) {
        const double cols[9] = {r.t,          r.kinetic,  r.elastic,
                                r.plastic_cum, r.boundary_psi_cum, r.boundary_flux_cum,
                                r.work_cum,   r.residual, r.sigma_gap};
        for (int c = 0; c < 9; ++c) {
            if (c) out += ',';
            out += format_double(cols[c]);
        }
        out += '\n';
    }
    return out;
}

LedgerFile parse_ledger_csv_text(std::string_view text) {
    LedgerFile out;
    std::size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
        line.assign(text.substr(pos, end - pos));
        pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
        return true;
    };
    std::string line;
    if (!next_line(line) || line.rfind("# config_hash 0x", 0) != 0)
        throw IoError("ledger parse error: missing config_hash comment line");
    out.config_hash = std::strtoull(line.c_str() + 14, nullptr, 16);
    if (!next_line(line) || line != kLedgerHeader)
        throw IoError("ledger parse error: bad header row");
    while (next_line(line)) {
        if (line.empty()) continue;
        double cols[9];
        const char* p = line.c_str();
        for (int c = 0; c < 9; ++c) {
            char* end = nullptr;
            cols[c] = std::strtod(p, &end);
            if (end == p || (c < 8 && *end != ',') || (c == 8 && *end != '\0'))
                throw IoError("ledger parse error: malformed row \"" + line + "\"");
            p = (c < 8) ? end + 1 : end;
        }
        out.rows.push_back(LedgerRow{cols[0], cols[1], cols[2], cols[3], cols[4], cols[5],
                                     cols[6], cols[7], cols[8]});
    }
    return out;
}

nlohmann::json manifest_doc(const SimConfig& cfg, long record_count) {
    nlohmann::json m;
    m["config"] = cfg.canonical;
    m["config_hash"] = hash_hex(cfg.hash);
    m["files"] = {{"ledger", "ledger.csv"}, {"snapshots", "snapshots.bin"}};
    m["format"] = {{"ledger", "csv-v1"}, {"manifest", 1}, {"snapshot", "PLSNAP01"}};
    m["program"] = kProgramVersion;
    m["run"] = {{"dt", cfg.dt},
                {"nsteps", cfg.nsteps},
                {"snapshot_records", record_count},
                {"snapshot_stride", cfg.snapshot_stride}};
    return m;
}

std::string manifest_text(const SimConfig& cfg, long record_count) {
    return manifest_doc(cfg, record_count).dump(2) + "\n";
}

void write_file(const std::string& path, std::string_view bytes) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory \"" + p.parent_path().string() + "\"");
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to \"" + path + "\"");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open \"" + path + "\"");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_run_directory(const std::string& dir, const SimConfig& cfg, const Trajectory& tr) {
    const Grid g = config_grid(cfg);
    const auto records = trajectory_records(tr);
    const auto rows = energy_ledger(tr);
    write_file(dir + "/manifest.json",
               manifest_text(cfg, static_cast<long>(records.size())));
    write_file(dir + "/ledger.csv", ledger_csv_text(cfg.hash, rows));
    write_file(dir + "/snapshots.bin", snapshot_bytes(g, cfg.hash, records));
}

}  // namespace plastlab
