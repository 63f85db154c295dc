// Python bindings for the main operations: the convex stress sets and their
// boundary trace law, config canonicalization and hashing, config-driven
// simulation with the energy ledger, and run-directory verification.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "plastlab/config.hpp"
#include "plastlab/io.hpp"
#include "plastlab/simulate.hpp"
#include "plastlab/traction_law.hpp"
#include "plastlab/verify.hpp"

namespace py = pybind11;
using namespace plastlab;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

SymMat<2> sym_from_array(const DArray& arr) {
    if (arr.ndim() != 2 || arr.shape(0) != 2 || arr.shape(1) != 2)
        throw py::value_error("expected a 2x2 matrix");
    const auto r = arr.unchecked<2>();
    const double skew = std::abs(r(0, 1) - r(1, 0));
    if (skew > 1e-12 * (1.0 + std::abs(r(0, 1)) + std::abs(r(1, 0))))
        throw py::value_error("matrix is not symmetric");
    SymMat<2> m;
    m.set(0, 0, r(0, 0));
    m.set(1, 1, r(1, 1));
    m.set(0, 1, 0.5 * (r(0, 1) + r(1, 0)));
    return m;
}

py::array_t<double> sym_to_array(const SymMat<2>& m) {
    py::array_t<double> out({2, 2});
    auto w = out.mutable_unchecked<2>();
    w(0, 0) = m(0, 0);
    w(0, 1) = m(0, 1);
    w(1, 0) = m(0, 1);
    w(1, 1) = m(1, 1);
    return out;
}

Vec<2> vec_from_array(const DArray& arr) {
    if (arr.ndim() != 1 || arr.shape(0) != 2) throw py::value_error("expected a length-2 vector");
    const auto r = arr.unchecked<1>();
    return Vec<2>{r(0), r(1)};
}

py::array_t<double> vec_to_array(const Vec<2>& v) {
    // note: the single-integer array_t constructor would produce a stride-0
    // array with this pybind11; always pass an explicit shape container
    py::array_t<double> out(std::vector<py::ssize_t>{2});
    auto w = out.mutable_unchecked<1>();
    w(0) = v[0];
    w(1) = v[1];
    return out;
}

// (ny+1, nx+1, 2) array of a nodal vector field
py::array_t<double> nodal_to_array(const Grid& g, const VectorField& f) {
    py::array_t<double> out({g.ny + 1, g.nx + 1, 2});
    auto w = out.mutable_unchecked<3>();
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const Vec<2>& v = f.data[static_cast<std::size_t>(g.node(i, j))];
            w(j, i, 0) = v[0];
            w(j, i, 1) = v[1];
        }
    return out;
}

// (ny, nx, 2, 2) array of a cell tensor field
py::array_t<double> cells_to_array(const Grid& g, const SymField& f) {
    py::array_t<double> out({g.ny, g.nx, 2, 2});
    auto w = out.mutable_unchecked<4>();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const SymMat<2>& m = f.data[static_cast<std::size_t>(g.cell(i, j))];
            w(j, i, 0, 0) = m(0, 0);
            w(j, i, 0, 1) = m(0, 1);
            w(j, i, 1, 0) = m(0, 1);
            w(j, i, 1, 1) = m(1, 1);
        }
    return out;
}

py::dict state_to_dict(const Grid& g, const State& s) {
    py::dict d;
    d["t"] = s.t;
    d["u"] = nodal_to_array(g, s.u);
    d["v"] = nodal_to_array(g, s.v);
    d["e"] = cells_to_array(g, s.e);
    d["p"] = cells_to_array(g, s.p);
    d["sigma"] = cells_to_array(g, s.sigma);
    return d;
}

py::dict ledger_to_dict(const std::vector<LedgerRow>& rows) {
    const auto n = static_cast<py::ssize_t>(rows.size());
    py::dict d;
    const auto column = [&](const char* name, double LedgerRow::* field) {
        py::array_t<double> arr(std::vector<py::ssize_t>{n});
        auto w = arr.mutable_unchecked<1>();
        for (py::ssize_t k = 0; k < n; ++k) w(k) = rows[static_cast<std::size_t>(k)].*field;
        d[name] = arr;
    };
    column("t", &LedgerRow::t);
    column("kinetic", &LedgerRow::kinetic);
    column("elastic", &LedgerRow::elastic);
    column("plastic_cum", &LedgerRow::plastic_cum);
    column("boundary_psi_cum", &LedgerRow::boundary_psi_cum);
    column("boundary_flux_cum", &LedgerRow::boundary_flux_cum);
    column("work_cum", &LedgerRow::work_cum);
    column("residual", &LedgerRow::residual);
    column("sigma_gap", &LedgerRow::sigma_gap);
    return d;
}

const char* status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        default: return "skip";
    }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Explicit dynamics of perfect plasticity with dissipative boundary conditions";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ElasticitySet<2>>(m, "ElasticitySet",
                                 "Closed convex set of admissible 2x2 stresses")
        .def_static("ball", &ElasticitySet<2>::ball, py::arg("radius"),
                    "Frobenius-norm ball of the given radius")
        .def_static("deviatoric_cylinder", &ElasticitySet<2>::deviatoric_cylinder,
                    py::arg("radius"),
                    "Stresses whose deviatoric part has Frobenius norm <= radius")
        .def_static(
            "halfspace_intersection",
            [](const std::vector<std::pair<DArray, double>>& planes) {
                std::vector<Halfspace<2>> hs;
                hs.reserve(planes.size());
                for (const auto& [normal, offset] : planes)
                    hs.push_back(Halfspace<2>{sym_from_array(normal), offset});
                return ElasticitySet<2>::halfspace_intersection(std::move(hs));
            },
            py::arg("planes"),
            "Intersection of halfspaces {tau : tau . normal <= offset}, given as "
            "(normal, offset) pairs")
        .def("project",
             [](const ElasticitySet<2>& K, const DArray& s) {
                 return sym_to_array(K.project(sym_from_array(s)));
             },
             py::arg("stress"), "Euclidean (Frobenius) projection onto the set")
        .def("support",
             [](const ElasticitySet<2>& K, const DArray& q) { return K.support(sym_from_array(q)); },
             py::arg("direction"),
             "Support function sup_{tau in K} tau : q; +inf in unbounded directions")
        .def("contains",
             [](const ElasticitySet<2>& K, const DArray& s, double band) {
                 return K.contains(sym_from_array(s), band);
             },
             py::arg("stress"), py::arg("band") = 1e-9)
        .def("margin_distance",
             [](const ElasticitySet<2>& K, const DArray& s) {
                 return K.margin_distance(sym_from_array(s));
             },
             py::arg("stress"), "Distance from the stress to the boundary of the set")
        .def_property_readonly("inradius", &ElasticitySet<2>::inradius)
        .def_property_readonly("radius", &ElasticitySet<2>::radius);

    m.def(
        "project_traction",
        [](const ElasticitySet<2>& K, const DArray& nu, double weight, const DArray& y) {
            return vec_to_array(project_minus_knu(K, vec_from_array(nu), weight,
                                                  vec_from_array(y)));
        },
        py::arg("set"), py::arg("nu"), py::arg("weight"), py::arg("y"),
        "Projection of y onto the admissible-traction set {-tau nu : tau in set}");

    m.def(
        "psi",
        [](const ElasticitySet<2>& K, const DArray& nu, double weight, const DArray& z) {
            return psi_eval(K, vec_from_array(nu), weight, vec_from_array(z));
        },
        py::arg("set"), py::arg("nu"), py::arg("weight"), py::arg("z"),
        "Relaxed boundary potential at slip rate z");

    m.def(
        "psi_grad",
        [](const ElasticitySet<2>& K, const DArray& nu, double weight, const DArray& z) {
            return vec_to_array(psi_grad(K, vec_from_array(nu), weight, vec_from_array(z)));
        },
        py::arg("set"), py::arg("nu"), py::arg("weight"), py::arg("z"),
        "Gradient of the relaxed boundary potential (the projected traction)");

    m.def(
        "moreau_yosida_H",
        [](const ElasticitySet<2>& K, double mu, const DArray& p) {
            return moreau_yosida_H(K, mu, sym_from_array(p));
        },
        py::arg("set"), py::arg("mu"), py::arg("p"),
        "Moreau-Yosida envelope of the dissipation potential at plastic rate p");

    m.def(
        "boundary_dissipation_density",
        [](const ElasticitySet<2>& K, const DArray& nu, const DArray& z) {
            return boundary_dissipation_density(K, vec_from_array(nu), vec_from_array(z));
        },
        py::arg("set"), py::arg("nu"), py::arg("z"),
        "Dissipation density H(-z (.) nu) of a boundary slip rate z");

    m.def(
        "canonical_config",
        [](const std::string& text) {
            const SimConfig cfg = parse_config_text(text);
            py::dict d;
            d["text"] = cfg.canonical_text;
            d["hash"] = hash_hex(cfg.hash);
            d["nsteps"] = cfg.nsteps;
            d["dt"] = cfg.dt;
            return d;
        },
        py::arg("text"),
        "Validates a JSON config; returns its canonical form, content hash, and "
        "resolved stepping");

    m.def(
        "simulate",
        [](const std::string& text) {
            const SimConfig cfg = parse_config_text(text);
            Trajectory tr;
            Problem pb = config_problem(cfg);
            {
                py::gil_scoped_release release;
                const State init = make_state(pb.grid, pb.part, config_initial(cfg, pb.grid));
                tr = run(pb, init, config_run_options(cfg));
            }
            py::dict d;
            d["hash"] = hash_hex(cfg.hash);
            d["nsteps"] = cfg.nsteps;
            d["dt"] = cfg.dt;
            d["ledger"] = ledger_to_dict(energy_ledger(tr));
            d["final"] = state_to_dict(pb.grid, tr.final_state);
            return d;
        },
        py::arg("text"),
        "Runs the configured simulation in memory; returns the energy ledger "
        "(dict of arrays) and the final fields");

    m.def(
        "simulate_to_dir",
        [](const std::string& text) {
            const SimConfig cfg = parse_config_text(text);
            long records = 0;
            {
                py::gil_scoped_release release;
                const Problem pb = config_problem(cfg);
                const State init = make_state(pb.grid, pb.part, config_initial(cfg, pb.grid));
                const Trajectory tr = run(pb, init, config_run_options(cfg));
                write_run_directory(cfg.out_dir, cfg, tr);
                records = static_cast<long>(trajectory_records(tr).size());
            }
            py::dict d;
            d["out_dir"] = cfg.out_dir;
            d["hash"] = hash_hex(cfg.hash);
            d["records"] = records;
            return d;
        },
        py::arg("text"),
        "Runs the configured simulation and writes manifest.json, ledger.csv, and "
        "snapshots.bin into the config's output directory");

    m.def(
        "verify_dir",
        [](const std::string& dir) {
            VerifyReport rep;
            {
                py::gil_scoped_release release;
                rep = verify_run(dir);
            }
            py::list checks;
            for (const CheckResult& c : rep.checks) {
                py::dict e;
                e["name"] = c.name;
                e["status"] = status_name(c.status);
                e["measured"] = c.measured;
                e["tolerance"] = c.tolerance;
                e["detail"] = c.detail;
                checks.append(e);
            }
            py::dict d;
            d["ok"] = rep.ok;
            d["text"] = verify_text(rep);
            d["checks"] = checks;
            return d;
        },
        py::arg("dir"), "Audits a finished run directory; see the CLI verify command");

    m.attr("__version__") = "0.1.0";
}
