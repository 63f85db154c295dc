#include "plastlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "plastlab/traction_law.hpp"

namespace plastlab {

namespace {

using nlohmann::json;

[[noreturn]] void missing_key(const std::string& path) {
    throw ConfigError("config error: missing required key \"" + path + "\"");
}

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

void check_object(const json& j, const std::string& path,
                  const std::vector<const char*>& allowed) {
    if (!j.is_object())
        throw ConfigError("config error: key \"" + (path.empty() ? "<root>" : path) +
                          "\" must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("config error: unknown key \"" + join(path, item.key()) + "\"");
    }
}

const json& req(const json& obj, const std::string& parent, const std::string& key) {
    const auto it = obj.find(key);
    if (it == obj.end()) missing_key(join(parent, key));
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number())
        throw ConfigError("config error: key \"" + path + "\" must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw ConfigError("config error: key \"" + path + "\" must be finite");
    return v;
}

double positive(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > 0.0))
        throw ConfigError("config error: key \"" + path + "\" out of range: must be > 0");
    return v;
}

long integer(const json& j, const std::string& path) {
    if (j.is_number_integer()) return j.get<long>();
    if (j.is_number()) {
        const double v = j.get<double>();
        if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15)
            return static_cast<long>(v);
    }
    throw ConfigError("config error: key \"" + path + "\" must be an integer");
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string())
        throw ConfigError("config error: key \"" + path + "\" must be a string");
    return j.get<std::string>();
}

json vec2_normalized(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("config error: key \"" + path + "\" must be an array of 2 numbers");
    return json::array({number(j[0], path + "[0]"), number(j[1], path + "[1]")});
}

Vec<2> as_vec2(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

// --- block validators; each returns the normalized canonical block ---

json normalize_grid(const json& doc, SimConfig& cfg) {
    const json& g = req(doc, "", "grid");
    check_object(g, "grid", {"Lx", "Ly", "nx", "ny"});
    cfg.Lx = positive(req(g, "grid", "Lx"), "grid.Lx");
    cfg.Ly = positive(req(g, "grid", "Ly"), "grid.Ly");
    auto cells = [&](const char* key) {
        const long v = integer(req(g, "grid", key), std::string("grid.") + key);
        if (v < 1 || v > 4096)
            throw ConfigError(std::string("config error: key \"grid.") + key +
                              "\" out of range: must be in [1, 4096]");
        return static_cast<int>(v);
    };
    cfg.nx = cells("nx");
    cfg.ny = cells("ny");
    try {
        Grid::make(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: key \"grid\" invalid: ") + e.what());
    }
    return json{{"Lx", cfg.Lx}, {"Ly", cfg.Ly}, {"nx", cfg.nx}, {"ny", cfg.ny}};
}

json normalize_hooke(const json& doc, SimConfig& cfg) {
    const json& h = req(doc, "", "hooke");
    check_object(h, "hooke", {"lambda", "mu"});
    const double lambda = number(req(h, "hooke", "lambda"), "hooke.lambda");
    const double mu = positive(req(h, "hooke", "mu"), "hooke.mu");
    if (lambda < 0.0)
        throw ConfigError("config error: key \"hooke.lambda\" out of range: must be >= 0");
    cfg.hooke = Hooke{lambda, mu};
    return json{{"lambda", lambda}, {"mu", mu}};
}

json normalize_set(const json& doc) {
    const json& s = req(doc, "", "elasticity_set");
    if (!s.is_object() || !s.contains("kind")) missing_key("elasticity_set.kind");
    const std::string kind = text(s["kind"], "elasticity_set.kind");
    if (kind == "ball") {
        check_object(s, "elasticity_set", {"kind", "radius"});
        return json{{"kind", kind},
                    {"radius", positive(req(s, "elasticity_set", "radius"),
                                        "elasticity_set.radius")}};
    }
    if (kind == "deviatoric_cylinder") {
        check_object(s, "elasticity_set", {"kind", "k"});
        return json{{"kind", kind},
                    {"k", positive(req(s, "elasticity_set", "k"), "elasticity_set.k")}};
    }
    if (kind == "halfspaces") {
        check_object(s, "elasticity_set", {"kind", "halfspaces"});
        const json& hs = req(s, "elasticity_set", "halfspaces");
        if (!hs.is_array() || hs.empty())
            throw ConfigError(
                "config error: key \"elasticity_set.halfspaces\" must be a nonempty array");
        json out = json::array();
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const std::string path = "elasticity_set.halfspaces[" + std::to_string(i) + "]";
            check_object(hs[i], path, {"normal", "offset"});
            const json& n = req(hs[i], path, "normal");
            if (!n.is_array() || n.size() != 3)
                throw ConfigError("config error: key \"" + path +
                                  ".normal\" must be an array of 3 numbers [xx, yy, xy]");
            json nn = json::array({number(n[0], path + ".normal[0]"),
                                   number(n[1], path + ".normal[1]"),
                                   number(n[2], path + ".normal[2]")});
            out.push_back(json{{"normal", nn},
                               {"offset", positive(req(hs[i], path, "offset"),
                                                   path + ".offset")}});
        }
        return json{{"kind", kind}, {"halfspaces", out}};
    }
    throw ConfigError("config error: key \"elasticity_set.kind\" must be one of "
                      "\"ball\", \"deviatoric_cylinder\", \"halfspaces\"");
}

json normalize_boundary(const json& doc) {
    const json& b = req(doc, "", "boundary");
    check_object(b, "boundary", {"bottom", "right", "top", "left"});
    json out;
    for (const char* edge : {"bottom", "right", "top", "left"}) {
        const std::string path = std::string("boundary.") + edge;
        const json& list = req(b, "boundary", edge);
        if (!list.is_array() || list.empty())
            throw ConfigError("config error: key \"" + path + "\" must be a nonempty array");
        json norm = json::array();
        double cursor = 0.0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string ipath = path + "[" + std::to_string(i) + "]";
            check_object(list[i], ipath, {"label", "from", "to"});
            const std::string label = text(req(list[i], ipath, "label"), ipath + ".label");
            if (label != "dirichlet" && label != "neumann")
                throw ConfigError("config error: key \"" + ipath +
                                  ".label\" must be \"dirichlet\" or \"neumann\"");
            const double from = number(req(list[i], ipath, "from"), ipath + ".from");
            const double to = number(req(list[i], ipath, "to"), ipath + ".to");
            if (!(from >= 0.0 && from < to && to <= 1.0))
                throw ConfigError("config error: key \"" + ipath +
                                  "\" out of range: need 0 <= from < to <= 1");
            if (std::abs(from - cursor) > 1e-12)
                throw ConfigError("config error: key \"" + path +
                                  "\" intervals must cover [0, 1] without gaps or overlap");
            cursor = to;
            norm.push_back(json{{"label", label}, {"from", from}, {"to", to}});
        }
        if (std::abs(cursor - 1.0) > 1e-12)
            throw ConfigError("config error: key \"" + path +
                              "\" intervals must cover [0, 1] without gaps or overlap");
        out[edge] = norm;
    }
    return out;
}

json normalize_mode(const json& doc) {
    const json& m = req(doc, "", "bc_mode");
    if (!m.is_object() || !m.contains("kind")) missing_key("bc_mode.kind");
    const std::string kind = text(m["kind"], "bc_mode.kind");
    if (kind == "dissipative") {
        check_object(m, "bc_mode", {"kind", "lambda"});
        return json{{"kind", kind},
                    {"lambda", positive(req(m, "bc_mode", "lambda"), "bc_mode.lambda")}};
    }
    if (kind == "limit") {
        check_object(m, "bc_mode", {"kind", "lambda_ref"});
        const double ref =
            m.contains("lambda_ref") ? positive(m["lambda_ref"], "bc_mode.lambda_ref") : 1e6;
        return json{{"kind", kind}, {"lambda_ref", ref}};
    }
    throw ConfigError(
        "config error: key \"bc_mode.kind\" must be \"dissipative\" or \"limit\"");
}

json normalize_time(const json& doc, SimConfig& cfg) {
    const json& t = req(doc, "", "time");
    check_object(t, "time", {"T", "cfl", "dt", "snapshot_stride"});
    cfg.T = positive(req(t, "time", "T"), "time.T");
    const bool has_cfl = t.contains("cfl");
    const bool has_dt = t.contains("dt");
    if (has_cfl == has_dt)
        throw ConfigError(
            "config error: exactly one of \"time.cfl\" and \"time.dt\" must be given");
    json out{{"T", cfg.T}};
    if (has_cfl) {
        cfg.cfl = positive(t["cfl"], "time.cfl");
        if (cfg.cfl > 1.0)
            throw ConfigError("config error: key \"time.cfl\" out of range: must be in (0, 1]");
        out["cfl"] = cfg.cfl;
    } else {
        cfg.dt_explicit = positive(t["dt"], "time.dt");
        out["dt"] = cfg.dt_explicit;
    }
    cfg.snapshot_stride =
        t.contains("snapshot_stride")
            ? integer(t["snapshot_stride"], "time.snapshot_stride")
            : 0;
    if (cfg.snapshot_stride < 0)
        throw ConfigError(
            "config error: key \"time.snapshot_stride\" out of range: must be >= 0");
    out["snapshot_stride"] = cfg.snapshot_stride;
    return out;
}

json normalize_initial_part(const json& j, const std::string& path, bool top,
                            SimConfig* cfg) {
    if (!j.is_object() || !j.contains("family")) missing_key(path + ".family");
    const std::string family = text(j["family"], path + ".family");
    json out{{"family", family}};
    auto with_margin = [&](std::vector<const char*> keys) {
        if (top) keys.push_back("r_margin");
        check_object(j, path, keys);
    };
    if (family == "zero") {
        with_margin({"family"});
    } else if (family == "standing_wave") {
        with_margin({"family", "amplitude", "mode"});
        out["amplitude"] = number(req(j, path, "amplitude"), path + ".amplitude");
        const long mode = integer(req(j, path, "mode"), path + ".mode");
        if (mode < 1 || mode > 64)
            throw ConfigError("config error: key \"" + path +
                              ".mode\" out of range: must be in [1, 64]");
        out["mode"] = mode;
    } else if (family == "gaussian_velocity" || family == "gaussian_displacement") {
        with_margin({"family", "center", "radius", "direction", "amplitude"});
        out["center"] = vec2_normalized(req(j, path, "center"), path + ".center");
        out["radius"] = positive(req(j, path, "radius"), path + ".radius");
        out["direction"] = vec2_normalized(req(j, path, "direction"), path + ".direction");
        out["amplitude"] = number(req(j, path, "amplitude"), path + ".amplitude");
    } else if (family == "sum") {
        with_margin({"family", "parts"});
        const json& parts = req(j, path, "parts");
        if (!parts.is_array() || parts.empty())
            throw ConfigError("config error: key \"" + path +
                              ".parts\" must be a nonempty array");
        json list = json::array();
        for (std::size_t i = 0; i < parts.size(); ++i)
            list.push_back(normalize_initial_part(
                parts[i], path + ".parts[" + std::to_string(i) + "]", false, nullptr));
        out["parts"] = list;
    } else {
        throw ConfigError("config error: key \"" + path +
                          ".family\" must be one of \"zero\", \"standing_wave\", "
                          "\"gaussian_velocity\", \"gaussian_displacement\", \"sum\"");
    }
    if (top) {
        double margin = 0.5;
        if (j.contains("r_margin")) margin = positive(j["r_margin"], path + ".r_margin");
        out["r_margin"] = margin;
        if (cfg) cfg->r_margin = margin;
    }
    return out;
}

json normalize_force(const json& doc) {
    if (!doc.contains("body_force")) return json{{"kind", "none"}};
    const json& f = doc["body_force"];
    if (!f.is_object() || !f.contains("kind")) missing_key("body_force.kind");
    const std::string kind = text(f["kind"], "body_force.kind");
    if (kind == "none") {
        check_object(f, "body_force", {"kind"});
        return json{{"kind", kind}};
    }
    if (kind == "uniform") {
        check_object(f, "body_force", {"kind", "f"});
        return json{{"kind", kind},
                    {"f", vec2_normalized(req(f, "body_force", "f"), "body_force.f")}};
    }
    if (kind == "pulse") {
        check_object(f, "body_force", {"kind", "f", "center", "radius", "t_end"});
        return json{{"kind", kind},
                    {"f", vec2_normalized(req(f, "body_force", "f"), "body_force.f")},
                    {"center", vec2_normalized(req(f, "body_force", "center"),
                                               "body_force.center")},
                    {"radius", positive(req(f, "body_force", "radius"), "body_force.radius")},
                    {"t_end", positive(req(f, "body_force", "t_end"), "body_force.t_end")}};
    }
    throw ConfigError(
        "config error: key \"body_force.kind\" must be \"none\", \"uniform\", or \"pulse\"");
}

InitialState build_initial_part(const json& d, const Grid& g, const Hooke& hooke) {
    const std::string family = d["family"].get<std::string>();
    if (family == "zero") return InitialState(g);
    if (family == "standing_wave")
        return make_standing_wave(g, hooke, d["amplitude"].get<double>(),
                                  static_cast<int>(d["mode"].get<long>()));
    if (family == "gaussian_velocity")
        return make_gaussian_velocity(g, as_vec2(d["center"]), d["radius"].get<double>(),
                                      as_vec2(d["direction"]), d["amplitude"].get<double>());
    if (family == "gaussian_displacement")
        return make_gaussian_displacement(g, hooke, as_vec2(d["center"]),
                                          d["radius"].get<double>(), as_vec2(d["direction"]),
                                          d["amplitude"].get<double>());
    // "sum"
    InitialState acc(g);
    for (const json& part : d["parts"]) acc = combine(g, hooke, acc, build_initial_part(part, g, hooke));
    return acc;
}

}  // namespace

SimConfig parse_config(const nlohmann::json& doc) {
    check_object(doc, "", {"grid", "hooke", "elasticity_set", "boundary", "bc_mode", "time",
                           "initial", "body_force", "output"});
    SimConfig cfg;
    json canonical;
    canonical["grid"] = normalize_grid(doc, cfg);
    canonical["hooke"] = normalize_hooke(doc, cfg);
    canonical["elasticity_set"] = normalize_set(doc);
    canonical["boundary"] = normalize_boundary(doc);
    canonical["bc_mode"] = normalize_mode(doc);
    canonical["time"] = normalize_time(doc, cfg);
    canonical["initial"] = normalize_initial_part(req(doc, "", "initial"), "initial", true, &cfg);
    canonical["body_force"] = normalize_force(doc);
    const json& outp = req(doc, "", "output");
    check_object(outp, "output", {"directory"});
    cfg.out_dir = text(req(outp, "output", "directory"), "output.directory");
    if (cfg.out_dir.empty())
        throw ConfigError("config error: key \"output.directory\" must be nonempty");
    canonical["output"] = json{{"directory", cfg.out_dir}};

    cfg.set_desc = canonical["elasticity_set"];
    cfg.boundary_desc = canonical["boundary"];
    cfg.mode_desc = canonical["bc_mode"];
    cfg.initial_desc = canonical["initial"];
    cfg.force_desc = canonical["body_force"];

    // Cross-block validation: the partition must snap onto this grid and the
    // set descriptor must construct.
    const Grid g = config_grid(cfg);
    (void)config_set(cfg);
    (void)config_partition(cfg, g);

    // Resolve the step count so T is hit exactly: dt = T / nsteps.
    const double dt_raw =
        cfg.dt_explicit > 0.0 ? cfg.dt_explicit : cfl_dt(g, cfg.hooke, cfg.cfl);
    cfg.nsteps = std::max<long>(1, static_cast<long>(std::ceil(cfg.T / dt_raw - 1e-9)));
    cfg.dt = cfg.T / static_cast<double>(cfg.nsteps);

    cfg.canonical = canonical;
    cfg.canonical_text = canonical.dump();
    cfg.hash = fnv1a64(cfg.canonical_text);
    return cfg;
}

SimConfig parse_config_text(const std::string& s) {
    json doc;
    try {
        doc = json::parse(s);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config error: cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

Grid config_grid(const SimConfig& cfg) { return Grid::make(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny); }

ElasticitySet<2> config_set(const SimConfig& cfg) {
    const std::string kind = cfg.set_desc["kind"].get<std::string>();
    try {
        if (kind == "ball") return ElasticitySet<2>::ball(cfg.set_desc["radius"].get<double>());
        if (kind == "deviatoric_cylinder")
            return ElasticitySet<2>::deviatoric_cylinder(cfg.set_desc["k"].get<double>());
        std::vector<Halfspace<2>> hs;
        for (const json& h : cfg.set_desc["halfspaces"]) {
            SymMat<2> n;
            n.set(0, 0, h["normal"][0].get<double>());
            n.set(1, 1, h["normal"][1].get<double>());
            n.set(0, 1, h["normal"][2].get<double>());
            const double nn = std::sqrt(ddot(n, n));
            if (!(nn > 0.0))
                throw std::invalid_argument("halfspace normal must be nonzero");
            hs.push_back(Halfspace<2>{(1.0 / nn) * n, h["offset"].get<double>() / nn});
        }
        return ElasticitySet<2>::halfspace_intersection(std::move(hs));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: key \"elasticity_set\" invalid: ") +
                          e.what());
    }
}

BoundaryPartition config_partition(const SimConfig& cfg, const Grid& g) {
    std::array<std::vector<EdgeInterval>, 4> edges;
    const char* names[4] = {"bottom", "right", "top", "left"};
    for (int e = 0; e < 4; ++e)
        for (const json& iv : cfg.boundary_desc[names[e]])
            edges[static_cast<std::size_t>(e)].push_back(
                EdgeInterval{iv["label"].get<std::string>() == "dirichlet"
                                 ? BoundaryLabel::Dirichlet
                                 : BoundaryLabel::Neumann,
                             iv["from"].get<double>(), iv["to"].get<double>()});
    try {
        return BoundaryPartition::make(g, edges);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: key \"boundary\" invalid: ") + e.what());
    }
}

BCMode config_mode(const SimConfig& cfg) {
    if (cfg.mode_desc["kind"].get<std::string>() == "dissipative")
        return BCMode::dissipative(cfg.mode_desc["lambda"].get<double>());
    return BCMode::limit(cfg.mode_desc["lambda_ref"].get<double>());
}

InitialState config_initial(const SimConfig& cfg, const Grid& g) {
    return build_initial_part(cfg.initial_desc, g, cfg.hooke);
}

BodyForce config_body_force(const SimConfig& cfg) {
    const std::string kind = cfg.force_desc["kind"].get<std::string>();
    if (kind == "none") return nullptr;
    if (kind == "uniform") {
        const Vec<2> f = as_vec2(cfg.force_desc["f"]);
        return [f](const Vec<2>&, double) { return f; };
    }
    const Vec<2> f = as_vec2(cfg.force_desc["f"]);
    const Vec<2> c = as_vec2(cfg.force_desc["center"]);
    const double r = cfg.force_desc["radius"].get<double>();
    const double t_end = cfg.force_desc["t_end"].get<double>();
    const double pi = 3.14159265358979323846;
    return [f, c, r, t_end, pi](const Vec<2>& x, double t) -> Vec<2> {
        if (t < 0.0 || t >= t_end) return Vec<2>{};
        const Vec<2> d = x - c;
        const double shape = std::sin(pi * t / t_end);
        return (std::exp(-0.5 * dot(d, d) / (r * r)) * shape * shape) * f;
    };
}

Problem config_problem(const SimConfig& cfg) {
    const Grid g = config_grid(cfg);
    return Problem{g, config_partition(cfg, g), cfg.hooke, config_set(cfg), config_mode(cfg),
                   config_body_force(cfg)};
}

RunOptions config_run_options(const SimConfig& cfg) {
    return RunOptions{cfg.nsteps, cfg.dt, cfg.snapshot_stride};
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace plastlab
