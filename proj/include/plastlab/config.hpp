#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "plastlab/analysis.hpp"
#include "plastlab/initial_data.hpp"
#include "plastlab/simulate.hpp"

// JSON run configuration: schema validation with dotted-path error messages,
// canonicalization with all defaults applied, and a stable 64-bit content
// hash that every output artifact carries. Builders turn the validated
// document into the runtime objects (grid, partition, elasticity set,
// boundary mode, initial state, body force).

namespace plastlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    // grid
    double Lx = 1.0, Ly = 1.0;
    int nx = 1, ny = 1;
    // material
    Hooke hooke{1.0, 1.0};
    // validated descriptor blocks (normalized copies of the input)
    nlohmann::json set_desc;
    nlohmann::json boundary_desc;
    nlohmann::json mode_desc;
    nlohmann::json initial_desc;
    nlohmann::json force_desc;
    // time discretization
    double T = 0.0;
    double cfl = 0.0;          // 0 when dt_explicit is given
    double dt_explicit = 0.0;  // 0 when cfl is given
    long snapshot_stride = 0;
    // initial-data margin used by the compatibility generator
    double r_margin = 0.5;
    std::string out_dir;
    // resolved stepping: dt = T / nsteps with nsteps = ceil(T / dt_raw)
    long nsteps = 0;
    double dt = 0.0;
    // canonical form (defaults applied, fixed key set) and its hash
    nlohmann::json canonical;
    std::string canonical_text;
    std::uint64_t hash = 0;
};

// Parses and validates a config document. Throws ConfigError whose message
// names the offending dotted key, e.g. `missing required key "hooke.mu"`.
SimConfig parse_config(const nlohmann::json& doc);
SimConfig parse_config_text(const std::string& text);
SimConfig load_config(const std::string& path);

// Builders for the runtime objects described by the config.
Grid config_grid(const SimConfig& cfg);
ElasticitySet<2> config_set(const SimConfig& cfg);
BoundaryPartition config_partition(const SimConfig& cfg, const Grid& g);
BCMode config_mode(const SimConfig& cfg);
InitialState config_initial(const SimConfig& cfg, const Grid& g);
BodyForce config_body_force(const SimConfig& cfg);
Problem config_problem(const SimConfig& cfg);
RunOptions config_run_options(const SimConfig& cfg);

// FNV-1a 64-bit hash and its "0x" + 16 lowercase hex digits rendering.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

}  // namespace plastlab
