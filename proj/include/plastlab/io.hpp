#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "plastlab/config.hpp"
#include "plastlab/simulate.hpp"

// Serialization of run artifacts. All formats are deterministic: no
// timestamps, doubles rendered with %.17g (text) or raw little-endian bits
// (binary), objects with sorted keys. Every artifact carries the config hash.
//
// Snapshot container ("PLSNAP01", version 1):
//   magic[8] | u64 config_hash | i64 nx | i64 ny | f64 Lx | f64 Ly |
//   i64 record_count | records...
// Each record: i64 step | f64 t | u | v | e | p | sigma, with nodal vector
// fields stored row-major as (x, y) pairs and cell tensor fields row-major
// as (xx, yy, xy) triples, all 64-bit floats.

namespace plastlab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SnapshotRecord {
    long step = 0;
    double t = 0.0;
    VectorField u, v;
    SymField e, p, sigma;
};

struct SnapshotSeries {
    std::uint64_t config_hash = 0;
    long nx = 0, ny = 0;
    double Lx = 0.0, Ly = 0.0;
    std::vector<SnapshotRecord> records;
};

// Binary round trip. parse_snapshot_bytes validates magic, version, and
// exact payload length, throwing IoError with a "snapshot integrity" message.
std::string snapshot_bytes(const Grid& g, std::uint64_t config_hash,
                           const std::vector<SnapshotRecord>& records);
SnapshotSeries parse_snapshot_bytes(std::string_view bytes);

// The saved records of a trajectory (stride multiples plus initial and final
// states, in step order).
std::vector<SnapshotRecord> trajectory_records(const Trajectory& tr);

// Ledger CSV: "# config_hash 0x..." comment, a header row, then one row per
// ledger entry with %.17g columns in the fixed order
// t,kinetic,elastic,plastic_cum,boundary_psi_cum,boundary_flux_cum,work_cum,
// residual,sigma_gap.
std::string ledger_csv_text(std::uint64_t config_hash, const std::vector<LedgerRow>& rows);
struct LedgerFile {
    std::uint64_t config_hash = 0;
    std::vector<LedgerRow> rows;
};
LedgerFile parse_ledger_csv_text(std::string_view text);

// Run manifest: canonical config, config hash, resolved stepping, artifact
// names, and format versions.
nlohmann::json manifest_doc(const SimConfig& cfg, long record_count);
std::string manifest_text(const SimConfig& cfg, long record_count);

// Whole-file helpers; write_file creates parent directories.
void write_file(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

// Writes manifest.json, ledger.csv, and snapshots.bin for a finished run.
void write_run_directory(const std::string& dir, const SimConfig& cfg, const Trajectory& tr);

// %.17g rendering used by all text artifacts (shortest exact round trip is
// not needed; 17 significant digits always round-trips IEEE doubles).
std::string format_double(double v);

}  // namespace plastlab
