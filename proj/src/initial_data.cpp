#include "plastlab/initial_data.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace plastlab {

namespace {

using Field = std::vector<Vec<2>>;

double field_dot(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += dot(a[i], b[i]);
    return s;
}

double field_norm(const Field& a) { return std::sqrt(field_dot(a, a)); }

// Applies w_n * z + h^2 G^T G z (the discrete  z - div(e(z))  pairing).
void apply_identity_plus_stiffness(const Grid& g, const Field& z, Field& out) {
    VectorField zf(g);
    zf.data = z;
    VectorField a = sym_gradient_adjoint(g, sym_gradient(g, zf));
    out = a.data;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const std::size_t n = static_cast<std::size_t>(g.node(i, j));
            out[n] += g.node_volume(i, j) * z[n];
        }
}

bool is_boundary_flat(const Grid& g, std::size_t n) {
    const int i = static_cast<int>(n) % (g.nx + 1);
    const int j = static_cast<int>(n) / (g.nx + 1);
    return g.boundary_node(i, j);
}

}  // namespace

long conjugate_gradient(const std::function<void(const Field&, Field&)>& apply, const Field& b,
                        Field& x, double tol, long cap) {
    const std::size_t n = b.size();
    x.assign(n, Vec<2>{});
    Field r = b;
    const double bnorm = field_norm(b);
    if (bnorm == 0.0) return 0;
    Field p = r;
    Field ap(n);
    double rr = field_dot(r, r);
    for (long it = 1; it <= cap; ++it) {
        apply(p, ap);
        const double pap = field_dot(p, ap);
        if (!(pap > 0.0))
            throw std::runtime_error("conjugate gradients: operator is not positive definite");
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = field_dot(r, r);
        if (std::sqrt(rr_new) <= tol * bnorm) return it;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw IterationLimitError("conjugate gradients: exceeded the iteration cap");
}

std::vector<Vec<2>> nodal_normal_trace(const Grid& g, const BoundaryPartition& part,
                                       const SymField& tau) {
    std::vector<Vec<2>> out(part.size());
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BoundaryNode& b = part[k];
        SymMat<2> avg{};
        int count = 0;
        for (int cj = b.j - 1; cj <= b.j; ++cj) {
            for (int ci = b.i - 1; ci <= b.i; ++ci) {
                if (ci < 0 || cj < 0 || ci >= g.nx || cj >= g.ny) continue;
                avg += tau.at(ci, cj);
                ++count;
            }
        }
        out[k] = apply((1.0 / count) * avg, b.nu);
    }
    return out;
}

CompatibleData make_initial(const Grid& g, const BoundaryPartition& part, const Hooke& hooke,
                            const ElasticitySet<2>& K, const InitialState& s0, double lambda,
                            double r_margin) {
    validate_hooke<2>(hooke);
    if (!(lambda > 0.0)) throw std::invalid_argument("make_initial: lambda must be positive");
    if (!(r_margin > 0.0)) throw std::invalid_argument("make_initial: r_margin must be positive");

    // --- Validate the structural preconditions on the input data. ---
    const SymField gu = sym_gradient(g, s0.u);
    double scale = 1.0;
    for (const auto& m : s0.e.data) scale = std::max(scale, norm(m));
    for (std::size_t c = 0; c < gu.data.size(); ++c) {
        if (norm(gu.data[c] - s0.e.data[c] - s0.p.data[c]) > 1e-8 * scale)
            throw std::invalid_argument(
                "make_initial: sym_gradient(u0) != e0 + p0 (additive decomposition violated)");
        if (norm(s0.sigma.data[c] - hooke_apply<2>(hooke, s0.e.data[c])) > 1e-8 * scale)
            throw std::invalid_argument("make_initial: sigma0 != hooke_apply(e0)");
    }
    const std::vector<Vec<2>> trace_sigma0 = nodal_normal_trace(g, part, s0.sigma);
    double vscale = 1.0;
    for (const auto& v : s0.v.data) vscale = std::max(vscale, norm(v));
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BoundaryNode& b = part[k];
        if (b.label == BoundaryLabel::Dirichlet &&
            norm(s0.v.data[static_cast<std::size_t>(b.index)]) > 1e-8 * vscale)
            throw std::invalid_argument("make_initial: v0 must vanish at Dirichlet nodes");
        if (b.label == BoundaryLabel::Neumann && norm(trace_sigma0[k]) > 1e-8 * scale)
            throw std::invalid_argument(
                "make_initial: sigma0 nu must vanish at Neumann nodes");
    }
    for (std::size_t c = 0; c < s0.sigma.data.size(); ++c) {
        if (K.margin_distance(s0.sigma.data[c]) < r_margin - 1e-12) {
            std::ostringstream msg;
            msg << "make_initial: sigma0 at cell " << c << " has margin "
                << K.margin_distance(s0.sigma.data[c]) << " < r_margin " << r_margin;
            throw std::invalid_argument(msg.str());
        }
    }

    CompatibleData out;
    out.trace_sigma0 = trace_sigma0;

    // --- z0:  w z0 + h^2 G^T G z0 = -(v0 ds) at boundary nodes. ---
    Field rhs(static_cast<std::size_t>(g.nnodes()), Vec<2>{});
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BoundaryNode& b = part[k];
        rhs[static_cast<std::size_t>(b.index)] -=
            b.ds * s0.v.data[static_cast<std::size_t>(b.index)];
    }
    Field z0;
    conjugate_gradient(
        [&g](const Field& z, Field& az) { apply_identity_plus_stiffness(g, z, az); }, rhs, z0,
        1e-13, 200000);
    out.z0 = VectorField(g);
    out.z0.data = z0;

    // Variational normal trace of e(z0): the boundary rows of the operator,
    // divided by ds. Equals -v0 within the solver tolerance.
    Field az0(z0.size());
    apply_identity_plus_stiffness(g, z0, az0);
    out.trace_ez0.resize(part.size());
    for (std::size_t k = 0; k < part.size(); ++k)
        out.trace_ez0[k] = (1.0 / part[k].ds) * az0[static_cast<std::size_t>(part[k].index)];

    // --- vhat: elliptic extension of the boundary values -sigma0 nu. ---
    // Interior rows of (w + h^2 G^T G) vanish; boundary values are pinned.
    Field lift(static_cast<std::size_t>(g.nnodes()), Vec<2>{});
    for (std::size_t k = 0; k < part.size(); ++k)
        lift[static_cast<std::size_t>(part[k].index)] = -1.0 * trace_sigma0[k];
    auto masked_apply = [&g](const Field& z, Field& az) {
        Field zin = z;
        for (std::size_t n = 0; n < zin.size(); ++n)
            if (is_boundary_flat(g, n)) zin[n] = Vec<2>{};
        apply_identity_plus_stiffness(g, zin, az);
        for (std::size_t n = 0; n < az.size(); ++n)
            if (is_boundary_flat(g, n)) az[n] = Vec<2>{};
    };
    Field blift(lift.size());
    apply_identity_plus_stiffness(g, lift, blift);
    for (std::size_t n = 0; n < blift.size(); ++n)
        blift[n] = is_boundary_flat(g, n) ? Vec<2>{} : -1.0 * blift[n];
    Field vhat_int;
    conjugate_gradient(masked_apply, blift, vhat_int, 1e-13, 200000);
    out.vhat = VectorField(g);
    for (std::size_t n = 0; n < vhat_int.size(); ++n)
        out.vhat.data[n] = lift[n] + (is_boundary_flat(g, n) ? Vec<2>{} : vhat_int[n]);

    // --- Assemble the corrected pair and enforce the margin bound. ---
    const SymField ez0 = sym_gradient(g, out.z0);
    for (const auto& m : ez0.data) out.ez0_max = std::max(out.ez0_max, norm(m));
    const double lambda_min = out.ez0_max / r_margin;
    if (lambda < lambda_min) {
        std::size_t worst = 0;
        for (std::size_t c = 0; c < ez0.data.size(); ++c)
            if (norm(ez0.data[c]) > norm(ez0.data[worst])) worst = c;
        std::ostringstream msg;
        msg << "make_initial: margin violation, lambda = " << lambda
            << " is below the admissible bound " << lambda_min << " set by cell " << worst
            << " (|e(z0)| = " << out.ez0_max << ", r_margin = " << r_margin << ")";
        throw std::runtime_error(msg.str());
    }

    out.v_lambda = s0.v;
    for (std::size_t n = 0; n < out.v_lambda.data.size(); ++n)
        out.v_lambda.data[n] += (1.0 / lambda) * out.vhat.data[n];
    out.sigma_lambda = s0.sigma;
    for (std::size_t c = 0; c < out.sigma_lambda.data.size(); ++c)
        out.sigma_lambda.data[c] += (1.0 / lambda) * ez0.data[c];
    return out;
}

InitialState make_standing_wave(const Grid& g, const Hooke& hooke, double amplitude, int mode) {
    validate_hooke<2>(hooke);
    if (mode < 1) throw std::invalid_argument("standing wave: mode must be at least 1");
    InitialState s(g);
    const double a = mode * 3.14159265358979323846;
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            const Vec<2> x = g.node_pos(i, j);
            s.u.at(i, j) = Vec<2>{-amplitude * std::cos(a * x[0]) * std::sin(a * x[1]),
                                  amplitude * std::sin(a * x[0]) * std::cos(a * x[1])};
        }
    }
    s.e = sym_gradient(g, s.u);
    for (std::size_t c = 0; c < s.e.data.size(); ++c)
        s.sigma.data[c] = hooke_apply<2>(hooke, s.e.data[c]);
    return s;
}

double standing_wave_frequency(const Hooke& hooke, int mode) {
    return mode * 3.14159265358979323846 * std::sqrt(2.0 * hooke.mu);
}

InitialState make_gaussian_velocity(const Grid& g, const Vec<2>& center, double radius,
                                    const Vec<2>& direction, double amplitude) {
    if (!(radius > 0.0)) throw std::invalid_argument("gaussian pulse: radius must be positive");
    InitialState s(g);
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            const Vec<2> d = g.node_pos(i, j) - center;
            s.v.at(i, j) =
                (amplitude * std::exp(-dot(d, d) / (2.0 * radius * radius))) * direction;
        }
    }
    return s;
}

InitialState make_gaussian_displacement(const Grid& g, const Hooke& hooke, const Vec<2>& center,
                                        double radius, const Vec<2>& direction,
                                        double amplitude) {
    validate_hooke<2>(hooke);
    if (!(radius > 0.0)) throw std::invalid_argument("gaussian pulse: radius must be positive");
    InitialState s(g);
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            const Vec<2> d = g.node_pos(i, j) - center;
            s.u.at(i, j) =
                (amplitude * std::exp(-dot(d, d) / (2.0 * radius * radius))) * direction;
        }
    }
    s.e = sym_gradient(g, s.u);
    for (std::size_t c = 0; c < s.e.data.size(); ++c)
        s.sigma.data[c] = hooke_apply<2>(hooke, s.e.data[c]);
    return s;
}

InitialState combine(const Grid& g, const Hooke& hooke, const InitialState& a,
                     const InitialState& b) {
    InitialState s(g);
    for (std::size_t n = 0; n < s.u.data.size(); ++n) {
        s.u.data[n] = a.u.data[n] + b.u.data[n];
        s.v.data[n] = a.v.data[n] + b.v.data[n];
    }
    for (std::size_t c = 0; c < s.e.data.size(); ++c) {
        s.e.data[c] = a.e.data[c] + b.e.data[c];
        s.p.data[c] = a.p.data[c] + b.p.data[c];
        s.sigma.data[c] = hooke_apply<2>(hooke, s.e.data[c]);
    }
    return s;
}

InitialState apply_compatible_correction(const Grid& g, const Hooke& hooke,
                                         const InitialState& base, const CompatibleData& data,
                                         double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("apply_compatible_correction: lambda must be positive");
    const double inv = 1.0 / lambda;
    InitialState s(g);
    for (std::size_t n = 0; n < s.u.data.size(); ++n) {
        s.u.data[n] = base.u.data[n] + inv * data.z0.data[n];
        s.v.data[n] = data.v_lambda.data[n];
    }
    const SymField ez0 = sym_gradient(g, data.z0);
    for (std::size_t c = 0; c < s.e.data.size(); ++c) {
        s.sigma.data[c] = data.sigma_lambda.data[c];
        s.e.data[c] = hooke_inverse<2>(hooke, s.sigma.data[c]);
        s.p.data[c] = base.p.data[c] +
                      inv * (ez0.data[c] - hooke_inverse<2>(hooke, ez0.data[c]));
    }
    return s;
}

std::vector<double> compatibility_residual(const BoundaryPartition& part,
                                           const CompatibleData& data, double lambda,
                                           const VectorField& v0) {
    std::vector<double> res(part.size(), 0.0);
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BoundaryNode& b = part[k];
        if (b.label == BoundaryLabel::Transition) continue;
        const double S = (b.label == BoundaryLabel::Dirichlet) ? lambda : 1.0 / lambda;
        const std::size_t n = static_cast<std::size_t>(b.index);
        const Vec<2> vl = v0.data[n] + (1.0 / lambda) * data.vhat.data[n];
        const Vec<2> trace = data.trace_sigma0[k] + (1.0 / lambda) * data.trace_ez0[k];
        res[k] = norm(S * vl + trace);
    }
    return res;
}

}  // namespace plastlab
