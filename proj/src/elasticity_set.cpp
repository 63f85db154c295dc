#include "plastlab/elasticity_set.hpp"

#include <cmath>
#include <limits>

namespace plastlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scaled spherical/deviatoric coordinates (s, d) with |x|^2 = s^2 + |d|^2.
template <int N>
double spherical_coord(const SymMat<N>& x) {
    return x.trace() / std::sqrt(double(N));
}

// Projection onto { x : xs^2 + |xd|^2 <= r^2 } when the two coordinate blocks
// carry metric weights ws, wd: minimize ws (xs - ys)^2 + wd |xd - yd|^2.
// Stationarity gives xs = ys / (1 + g/ws), xd = yd / (1 + g/wd) with g >= 0
// solving the radius equation; g is found by safeguarded Newton.
struct BlockScaled {
    double ys, yd;  // input coordinates (yd = norm of the deviatoric block)
    double ws, wd;  // metric weights
    double r;

    // returns the multiplier g, or 0 when already inside
    double solve() const {
        if (ys * ys + yd * yd <= r * r) return 0.0;
        auto val = [&](double g) {
            const double xs = ys / (1.0 + g / ws);
            const double xd = yd / (1.0 + g / wd);
            return xs * xs + xd * xd - r * r;
        };
        double lo = 0.0;
        double hi = std::max(ws, wd) * (std::sqrt(ys * ys + yd * yd) / r);
        while (val(hi) > 0.0) hi *= 2.0;
        double g = 0.5 * hi;
        for (int it = 0; it < 200; ++it) {
            const double f = val(g);
            if (f > 0.0) lo = g; else hi = g;
            // derivative of val
            const double xs = ys / (1.0 + g / ws);
            const double xd = yd / (1.0 + g / wd);
            const double df = -2.0 * (xs * xs / (ws + g) + xd * xd / (wd + g));
            double gn = (df != 0.0) ? g - f / df : 0.5 * (lo + hi);
            if (!(gn > lo && gn < hi)) gn = 0.5 * (lo + hi);
            if (std::abs(gn - g) <= 1e-16 * (1.0 + g)) { g = gn; break; }
            g = gn;
        }
        return g;
    }
};

}  // namespace

template <int N>
ElasticitySet<N> ElasticitySet<N>::ball(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("elasticity set: ball radius must be positive");
    ElasticitySet s;
    s.kind_ = SetKind::Ball;
    s.radius_ = r;
    s.inradius_ = r;
    return s;
}

template <int N>
ElasticitySet<N> ElasticitySet<N>::deviatoric_cylinder(double k) {
    if (!(k > 0.0)) throw std::invalid_argument("elasticity set: cylinder radius must be positive");
    ElasticitySet s;
    s.kind_ = SetKind::DeviatoricCylinder;
    s.radius_ = k;
    s.inradius_ = k;
    return s;
}

template <int N>
ElasticitySet<N> ElasticitySet<N>::halfspace_intersection(std::vector<Halfspace<N>> hs) {
    if (hs.empty())
        throw std::invalid_argument("elasticity set: halfspace list must be nonempty");
    double rin = kInf;
    for (auto& h : hs) {
        const double n = norm(h.normal);
        if (!(n > 0.0))
            throw std::invalid_argument("elasticity set: halfspace normal must be nonzero");
        h.normal *= 1.0 / n;
        h.offset /= n;
        if (!(h.offset > 0.0))
            throw std::invalid_argument(
                "elasticity set: halfspace offsets must be positive (origin interior)");
        rin = std::min(rin, h.offset);
    }
    ElasticitySet s;
    s.kind_ = SetKind::HalfspaceIntersection;
    s.halfspaces_ = std::move(hs);
    s.inradius_ = rin;
    return s;
}

template <int N>
double ElasticitySet<N>::radius() const {
    if (kind_ == SetKind::HalfspaceIntersection)
        throw std::logic_error("elasticity set: halfspace intersection has no single radius");
    return radius_;
}

template <int N>
double ElasticitySet<N>::support(const SymMat<N>& q) const {
    switch (kind_) {
        case SetKind::Ball:
            return radius_ * norm(q);
        case SetKind::DeviatoricCylinder: {
            if (std::abs(q.trace()) > kTraceBand * (1.0 + norm(q))) return kInf;
            return radius_ * norm(dev_split(q).dev);
        }
        case SetKind::HalfspaceIntersection:
            return support_halfspaces(q);
    }
    return 0.0;
}

// Support of a polyhedron by saturation of t -> P_K(t q) : q. For polyhedral
// sets the projection lands on the exposed face at finite t, so consecutive
// doublings agree (up to projection noise, which scales with t) once t is
// large enough; lack of saturation marks an unbounded direction. A saturated
// value is then polished through the dual identity: with mu solving
// sum mu_i N_i = q on the active constraints, sum mu_i c_i equals q : tau*
// exactly, regardless of which spanning subset the least squares picks.
template <int N>
double ElasticitySet<N>::support_halfspaces(const SymMat<N>& q) const {
    const double nq = norm(q);
    if (nq == 0.0) return 0.0;
    const SymMat<N> qh = (1.0 / nq) * q;
    double t = 4.0;
    SymMat<N> p = project(t * qh);
    double prev = ddot(p, qh);
    int agree = 0;
    while (t < 1e9) {
        t *= 2.0;
        p = project(t * qh);
        const double cur = ddot(p, qh);
        if (std::abs(cur - prev) <= 1e-10 * (1.0 + std::abs(cur)) + 1e-10 * t) {
            if (++agree >= 2) {
                const double polished = polish_support(qh, p);
                return nq * (std::isfinite(polished) ? polished : cur);
            }
        } else {
            agree = 0;
        }
        prev = cur;
    }
    return kInf;
}

// Least-squares representation of q in the span of the active normals via
// modified Gram-Schmidt; returns NaN when q is not in that span.
template <int N>
double ElasticitySet<N>::polish_support(const SymMat<N>& q, const SymMat<N>& tau) const {
    std::vector<int> active;
    for (int i = 0; i < static_cast<int>(halfspaces_.size()); ++i)
        if (ddot(halfspaces_[i].normal, tau) >= halfspaces_[i].offset - 1e-6 * (1.0 + norm(tau)))
            active.push_back(i);
    if (active.empty()) return std::numeric_limits<double>::quiet_NaN();

    // Orthonormalize active normals, tracking the combination weights.
    std::vector<SymMat<N>> basis;
    std::vector<std::vector<double>> weights;  // basis[j] = sum_k w[j][k] N_active[k]
    for (std::size_t k = 0; k < active.size(); ++k) {
        SymMat<N> v = halfspaces_[active[k]].normal;
        std::vector<double> w(active.size(), 0.0);
        w[k] = 1.0;
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const double c = ddot(v, basis[j]);
            v -= c * basis[j];
            for (std::size_t l = 0; l < active.size(); ++l) w[l] -= c * weights[j][l];
        }
        const double n = norm(v);
        if (n > 1e-10) {
            v *= 1.0 / n;
            for (auto& x : w) x /= n;
            basis.push_back(v);
            weights.push_back(std::move(w));
        }
    }
    SymMat<N> r = q;
    double val = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const double c = ddot(r, basis[j]);
        r -= c * basis[j];
        for (std::size_t l = 0; l < active.size(); ++l)
            val += c * weights[j][l] * halfspaces_[active[l]].offset;
    }
    if (norm(r) > 1e-9 * (1.0 + norm(q))) return std::numeric_limits<double>::quiet_NaN();
    return val;
}

template <int N>
SymMat<N> ElasticitySet<N>::project(const SymMat<N>& s) const {
    switch (kind_) {
        case SetKind::Ball: {
            const double n = norm(s);
            return (n <= radius_) ? s : (radius_ / n) * s;
        }
        case SetKind::DeviatoricCylinder: {
            auto [d, mean] = dev_split(s);
            const double nd = norm(d);
            if (nd > radius_) d *= radius_ / nd;
            for (int i = 0; i < N; ++i) d.set(i, i, d(i, i) + mean);
            return d;
        }
        case SetKind::HalfspaceIntersection:
            return project_halfspaces(s, nullptr);
    }
    return s;
}

template <int N>
SymMat<N> ElasticitySet<N>::project(const SymMat<N>& s, const Hooke& h) const {
    validate_hooke<N>(h);
    switch (kind_) {
        case SetKind::Ball: {
            // The inverse-Hooke metric decouples into spherical and
            // deviatoric blocks with weights 1/(N lambda + 2 mu) and 1/(2 mu).
            auto [d, mean] = dev_split(s);
            const double ys = mean * std::sqrt(double(N));
            const double yd = norm(d);
            BlockScaled p{ys, yd, 1.0 / (N * h.lambda + 2.0 * h.mu), 1.0 / (2.0 * h.mu),
                          radius_};
            const double g = p.solve();
            if (g == 0.0) return s;
            const double xs = ys / (1.0 + g * (N * h.lambda + 2.0 * h.mu));
            const double scale_d = 1.0 / (1.0 + g * 2.0 * h.mu);
            SymMat<N> out = scale_d * d;
            const double m = xs / std::sqrt(double(N));
            for (int i = 0; i < N; ++i) out.set(i, i, out(i, i) + m);
            return out;
        }
        case SetKind::DeviatoricCylinder:
            // The constraint only touches the deviatoric block and the metric
            // is block diagonal, so the projection matches the Frobenius one.
            return project(s);
        case SetKind::HalfspaceIntersection:
            return project_halfspaces(s, &h);
    }
    return s;
}

// Dykstra's alternating projections; exact per-halfspace projections in the
// requested metric keep the iteration inside the correct geometry.
template <int N>
SymMat<N> ElasticitySet<N>::project_halfspaces(const SymMat<N>& s, const Hooke* h) const {
    const auto m = static_cast<int>(halfspaces_.size());
    std::vector<SymMat<N>> corr(m);
    // Precompute M^-1 N_i and N_i : M^-1 N_i for the metric M.
    std::vector<SymMat<N>> dir(m);
    std::vector<double> den(m);
    for (int i = 0; i < m; ++i) {
        dir[i] = h ? hooke_apply<N>(*h, halfspaces_[i].normal) : halfspaces_[i].normal;
        den[i] = ddot(halfspaces_[i].normal, dir[i]);
    }
    SymMat<N> x = s;
    const double scale = 1.0 + norm(s);
    for (long sweep = 0; sweep < proj_cap_; ++sweep) {
        double moved = 0.0;
        for (int i = 0; i < m; ++i) {
            const SymMat<N> y = x + corr[i];
            const double viol = ddot(halfspaces_[i].normal, y) - halfspaces_[i].offset;
            SymMat<N> xn = y;
            if (viol > 0.0) xn -= (viol / den[i]) * dir[i];
            corr[i] = y - xn;
            moved += norm(xn - x);
            x = xn;
        }
        double viol = 0.0;
        for (int i = 0; i < m; ++i)
            viol = std::max(viol, ddot(halfspaces_[i].normal, x) - halfspaces_[i].offset);
        if (moved <= proj_tol_ * scale && viol <= proj_tol_ * scale) return x;
    }
    throw IterationLimitError(
        "elasticity set: halfspace projection exceeded the iteration cap");
}

template <int N>
double ElasticitySet<N>::margin_distance(const SymMat<N>& s) const {
    switch (kind_) {
        case SetKind::Ball:
            return radius_ - norm(s);
        case SetKind::DeviatoricCylinder:
            return radius_ - norm(dev_split(s).dev);
        case SetKind::HalfspaceIntersection: {
            double m = kInf;
            for (const auto& hs : halfspaces_)
                m = std::min(m, hs.offset - ddot(hs.normal, s));
            return m;
        }
    }
    return 0.0;
}

template class ElasticitySet<2>;
template class ElasticitySet<3>;

}  // namespace plastlab
