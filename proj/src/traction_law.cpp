#include "plastlab/traction_law.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace plastlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <int N>
struct NormalSplit {
    double a;     // z . nu
    Vec<N> tang;  // z - a nu
    double b;     // |tang|
};

template <int N>
NormalSplit<N> split(const Vec<N>& nu, const Vec<N>& z) {
    const double a = dot(z, nu);
    const Vec<N> t = z - a * nu;
    return {a, t, norm(t)};
}

// Projection onto the ellipsoid { a^2 + 2 b^2 <= r^2 } in (normal, tangential)
// coordinates: components scale as a/(1+g), b/(1+2g) with g >= 0 solving the
// radius equation (safeguarded Newton).
template <int N>
Vec<N> project_ellipsoid(const Vec<N>& nu, const Vec<N>& y, double r) {
    const auto s = split(nu, y);
    const double q0 = s.a * s.a + 2.0 * s.b * s.b;
    if (q0 <= r * r) return y;
    auto val = [&](double g) {
        const double a = s.a / (1.0 + g);
        const double b = s.b / (1.0 + 2.0 * g);
        return a * a + 2.0 * b * b - r * r;
    };
    double lo = 0.0, hi = 1.0;
    while (val(hi) > 0.0) hi *= 2.0;
    double g = 0.5 * hi;
    for (int it = 0; it < 200; ++it) {
        const double f = val(g);
        if (f > 0.0) lo = g; else hi = g;
        const double a = s.a / (1.0 + g);
        const double b = s.b / (1.0 + 2.0 * g);
        const double df = -2.0 * a * a / (1.0 + g) - 8.0 * b * b / (1.0 + 2.0 * g);
        double gn = (df != 0.0) ? g - f / df : 0.5 * (lo + hi);
        if (!(gn > lo && gn < hi)) gn = 0.5 * (lo + hi);
        if (std::abs(gn - g) <= 1e-16 * (1.0 + g)) { g = gn; break; }
        g = gn;
    }
    return (s.a / (1.0 + g)) * nu + (1.0 / (1.0 + 2.0 * g)) * s.tang;
}

// Minimum-Frobenius-norm symmetric lift with tau nu = -y.
template <int N>
SymMat<N> min_norm_lift(const Vec<N>& nu, const Vec<N>& y) {
    return -1.0 * (2.0 * sym_outer(y, nu) - dot(y, nu) * outer(nu));
}

// Projected-gradient descent of (1/2)|y + tau nu|^2 over K. The gradient map
// tau -> (y + tau nu) (.) nu has unit Lipschitz constant, so step 1 is safe.
template <int N>
Vec<N> project_lift(const ElasticitySet<N>& set, const Vec<N>& nu, const Vec<N>& y) {
    // Accelerated projected gradient on f(tau) = |y + tau nu|^2 / 2 over the
    // set, with momentum restarts. The map tau -> (tau nu) (.) nu has unit
    // spectral norm, so the unit step is admissible. The stop tolerance sits
    // above the inner projection tolerance (1e-10 relative) because the
    // iterates inherit that noise floor.
    SymMat<N> tau = set.project(min_norm_lift(nu, y));
    SymMat<N> tau_prev = tau;
    Vec<N> w = -apply(tau, nu);
    double mom = 1.0;
    int agree = 0;
    const double res_tol = 1e-9 * (1.0 + norm(y));
    for (long it = 0; it < 200000; ++it) {
        const double mom_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
        const double beta = (mom - 1.0) / mom_next;
        const SymMat<N> s = tau + beta * (tau - tau_prev);
        const SymMat<N> tau_next = set.project(s - sym_outer(y + apply(s, nu), nu));
        mom = (ddot(s - tau_next, tau_next - tau) > 0.0) ? 1.0 : mom_next;
        tau_prev = tau;
        tau = tau_next;
        const Vec<N> wn = -apply(tau, nu);
        if (norm(wn - w) <= 3e-10 * (1.0 + norm(wn))) {
            ++agree;
        } else if (agree > 0) {
            agree = 0;
        }
        w = wn;
        if (agree >= 2) {
            // A plateau only nominates a candidate; accept it when the
            // unaccelerated step confirms a projected-gradient fixed point.
            const SymMat<N> fixed = set.project(tau - sym_outer(y + apply(tau, nu), nu));
            if (norm(fixed - tau) <= res_tol) return -apply(fixed, nu);
            tau_prev = tau;
            tau = fixed;
            w = -apply(tau, nu);
            mom = 1.0;
            agree = -200;  // back off before re-testing the residual
        }
    }
    throw IterationLimitError("traction law: lifted projection exceeded the iteration cap");
}

// Dykstra over a list of projection oracles (used for K intersect Ball(mu)).
template <int N>
SymMat<N> project_intersection(const SymMat<N>& y,
                               const std::vector<std::function<SymMat<N>(const SymMat<N>&)>>& ps,
                               double tol, long cap) {
    const auto m = static_cast<int>(ps.size());
    std::vector<SymMat<N>> corr(m);
    SymMat<N> x = y;
    const double scale = 1.0 + norm(y);
    for (long sweep = 0; sweep < cap; ++sweep) {
        const SymMat<N> x_before = x;
        for (int i = 0; i < m; ++i) {
            const SymMat<N> z = x + corr[i];
            const SymMat<N> xn = ps[i](z);
            corr[i] = z - xn;
            x = xn;
        }
        // Converged once a full sweep no longer changes the iterate and the
        // iterate is (numerically) a fixed point of every projector.
        if (norm(x - x_before) <= tol * scale) {
            double feas = 0.0;
            for (int i = 0; i < m; ++i) feas = std::max(feas, norm(ps[i](x) - x));
            if (feas <= 100.0 * tol * scale) return x;
        }
    }
    throw IterationLimitError("traction law: intersection projection exceeded the iteration cap");
}

template <int N>
double support_by_saturation(const std::function<SymMat<N>(const SymMat<N>&)>& project,
                             const SymMat<N>& q) {
    const double nq = norm(q);
    if (nq == 0.0) return 0.0;
    const SymMat<N> qh = (1.0 / nq) * q;
    double t = 4.0;
    double prev = ddot(project(t * qh), qh);
    int agree = 0;
    while (t < 1e9) {
        t *= 2.0;
        const double cur = ddot(project(t * qh), qh);
        // The projection error grows with the probe magnitude, so the
        // agreement band must scale with t as well.
        if (std::abs(cur - prev) <= 1e-10 * (1.0 + std::abs(cur)) + 1e-10 * t) {
            if (++agree >= 2) return nq * cur;
        } else {
            agree = 0;
        }
        prev = cur;
    }
    return kInf;
}

}  // namespace

template <int N>
Vec<N> project_minus_knu_lift(const ElasticitySet<N>& set, const Vec<N>& nu, const Vec<N>& y) {
    return project_lift(set, nu, y);
}

template <int N>
Vec<N> project_minus_knu(const ElasticitySet<N>& set, const Vec<N>& nu, double /*weight*/,
                         const Vec<N>& y) {
    switch (set.kind()) {
        case SetKind::Ball:
            return project_ellipsoid(nu, y, set.radius());
        case SetKind::DeviatoricCylinder: {
            const auto s = split(nu, y);
            const double rt = set.radius() / std::sqrt(2.0);
            const Vec<N> t = (s.b <= rt) ? s.tang : (rt / s.b) * s.tang;
            return s.a * nu + t;
        }
        case SetKind::HalfspaceIntersection:
            return project_lift(set, nu, y);
    }
    return y;
}

template <int N>
bool minus_knu_membership(const ElasticitySet<N>& set, const Vec<N>& nu, const Vec<N>& z,
                          double band) {
    switch (set.kind()) {
        case SetKind::Ball: {
            const auto s = split(nu, z);
            return std::sqrt(s.a * s.a + 2.0 * s.b * s.b) <= set.radius() + band;
        }
        case SetKind::DeviatoricCylinder: {
            const auto s = split(nu, z);
            return std::sqrt(2.0) * s.b <= set.radius() + band;
        }
        case SetKind::HalfspaceIntersection:
            return norm(project_minus_knu(set, nu, 1.0, z) - z) <= band;
    }
    return false;
}

template <int N>
double psi_eval(const ElasticitySet<N>& set, const Vec<N>& nu, double weight, const Vec<N>& z) {
    if (std::isinf(weight)) return boundary_dissipation_density(set, nu, z);
    const Vec<N> xi = project_minus_knu(set, nu, weight, weight * z);
    return dot(xi, z) - dot(xi, xi) / (2.0 * weight);
}

template <int N>
Vec<N> psi_grad(const ElasticitySet<N>& set, const Vec<N>& nu, double weight, const Vec<N>& z) {
    return project_minus_knu(set, nu, weight, weight * z);
}

template <int N>
double moreau_yosida_H(const ElasticitySet<N>& set, double mu, const SymMat<N>& p) {
    if (!(mu > 0.0)) throw std::invalid_argument("moreau_yosida_H: mu must be positive");
    switch (set.kind()) {
        case SetKind::Ball:
            return std::min(set.radius(), mu) * norm(p);
        case SetKind::DeviatoricCylinder: {
            // Support of the cylinder cut by the ball of radius mu: maximize
            // a d + sqrt(mu^2 - a^2) m over 0 <= a <= min(k, mu), where d and
            // m are the deviatoric and spherical magnitudes of p.
            const auto [pd, mean] = dev_split(p);
            const double d = norm(pd);
            const double m = std::abs(mean) * std::sqrt(double(N));
            const double np = std::sqrt(d * d + m * m);
            if (np == 0.0) return 0.0;
            const double kbar = std::min(set.radius(), mu);
            const double a_unc = mu * d / np;
            if (a_unc <= kbar) return mu * np;
            return kbar * d + std::sqrt(mu * mu - kbar * kbar) * m;
        }
        case SetKind::HalfspaceIntersection: {
            std::vector<std::function<SymMat<N>(const SymMat<N>&)>> ps;
            for (const auto& hs : set.halfspaces()) {
                ps.push_back([hs](const SymMat<N>& y) {
                    const double v = ddot(hs.normal, y) - hs.offset;
                    return (v > 0.0) ? SymMat<N>(y - v * hs.normal) : y;
                });
            }
            ps.push_back([mu](const SymMat<N>& y) {
                const double n = norm(y);
                return (n <= mu) ? y : SymMat<N>((mu / n) * y);
            });
            auto proj = [&ps](const SymMat<N>& y) {
                return project_intersection<N>(y, ps, 1e-11, 100000);
            };
            return support_by_saturation<N>(proj, p);
        }
    }
    return 0.0;
}

template <int N>
double boundary_dissipation_density(const ElasticitySet<N>& set, const Vec<N>& nu,
                                    const Vec<N>& z) {
    return set.support(-1.0 * sym_outer(z, nu));
}

template <int N>
BoundaryProx<N> boundary_prox(const ElasticitySet<N>& set, const Vec<N>& nu, double weight,
                              double alpha, const Vec<N>& v_pred) {
    if (!(alpha > 0.0)) throw std::invalid_argument("boundary_prox: alpha must be positive");
    const double c = alpha + (std::isinf(weight) ? 0.0 : 1.0 / weight);
    const Vec<N> xi = project_minus_knu(set, nu, weight, (1.0 / c) * v_pred);
    return {v_pred - alpha * xi, -1.0 * xi};
}

#define PLASTLAB_INSTANTIATE(N)                                                              \
    template Vec<N> project_minus_knu<N>(const ElasticitySet<N>&, const Vec<N>&, double,    \
                                         const Vec<N>&);                                    \
    template Vec<N> project_minus_knu_lift<N>(const ElasticitySet<N>&, const Vec<N>&,       \
                                              const Vec<N>&);                               \
    template bool minus_knu_membership<N>(const ElasticitySet<N>&, const Vec<N>&,           \
                                          const Vec<N>&, double);                           \
    template double psi_eval<N>(const ElasticitySet<N>&, const Vec<N>&, double,             \
                                const Vec<N>&);                                             \
    template Vec<N> psi_grad<N>(const ElasticitySet<N>&, const Vec<N>&, double,             \
                                const Vec<N>&);                                             \
    template double moreau_yosida_H<N>(const ElasticitySet<N>&, double, const SymMat<N>&);  \
    template double boundary_dissipation_density<N>(const ElasticitySet<N>&, const Vec<N>&, \
                                                    const Vec<N>&);                         \
    template BoundaryProx<N> boundary_prox<N>(const ElasticitySet<N>&, const Vec<N>&,       \
                                              double, double, const Vec<N>&);

PLASTLAB_INSTANTIATE(2)
PLASTLAB_INSTANTIATE(3)

#undef PLASTLAB_INSTANTIATE

}  // namespace plastlab
