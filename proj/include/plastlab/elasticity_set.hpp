#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plastlab/tensor.hpp"

// Admissible stress sets: closed convex sets of symmetric tensors containing
// a ball around the origin. Three shapes are supported:
//   * Ball(r)                : { tau : |tau| <= r }
//   * DeviatoricCylinder(k)  : { tau : |dev tau| <= k }, trace unconstrained
//   * HalfspaceIntersection  : { tau : N_i : tau <= c_i } with |N_i| = 1, c_i > 0
// Projections are available in the Frobenius metric and in the inverse-Hooke
// metric <x,y> = (A^-1 x) : y used by the stress return map.

namespace plastlab {

struct IterationLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SetKind { Ball, DeviatoricCylinder, HalfspaceIntersection };

template <int N>
struct Halfspace {
    SymMat<N> normal;  // stored with unit Frobenius norm
    double offset = 1.0;
};

template <int N>
class ElasticitySet {
public:
    static ElasticitySet ball(double r);
    static ElasticitySet deviatoric_cylinder(double k);
    static ElasticitySet halfspace_intersection(std::vector<Halfspace<N>> hs);

    SetKind kind() const { return kind_; }
    // Ball radius or cylinder deviatoric radius; throws for halfspace sets.
    double radius() const;
    const std::vector<Halfspace<N>>& halfspaces() const { return halfspaces_; }

    // Largest rho with B(0, rho) inside the set.
    double inradius() const { return inradius_; }

    // Support function sup_{tau in K} tau : q. May return +infinity.
    double support(const SymMat<N>& q) const;

    // Nearest point of the set, Frobenius metric or inverse-Hooke metric.
    SymMat<N> project(const SymMat<N>& s) const;
    SymMat<N> project(const SymMat<N>& s, const Hooke& h) const;

    // sup { rho >= 0 : s + B(0, rho) subset of K }; negative when s lies
    // outside, in which case it is minus the distance to the set boundary
    // along the active constraint.
    double margin_distance(const SymMat<N>& s) const;

    bool contains(const SymMat<N>& s, double band = 1e-9) const {
        return margin_distance(s) >= -band;
    }

    // Iteration controls for the halfspace projection loop (tests lower the
    // cap to exercise the failure path).
    void set_projection_controls(double tol, long cap) {
        proj_tol_ = tol;
        proj_cap_ = cap;
    }

private:
    ElasticitySet() = default;

    SymMat<N> project_halfspaces(const SymMat<N>& s, const Hooke* h) const;
    double support_halfspaces(const SymMat<N>& q) const;
    double polish_support(const SymMat<N>& q, const SymMat<N>& tau) const;

    SetKind kind_ = SetKind::Ball;
    double radius_ = 1.0;
    double inradius_ = 1.0;
    std::vector<Halfspace<N>> halfspaces_;
    double proj_tol_ = 1e-10;
    long proj_cap_ = 100000;
};

// Relative trace tolerance below which a tensor counts as deviatoric when
// evaluating supports that are finite only on trace-free arguments.
inline constexpr double kTraceBand = 1e-10;

using ElasticitySet2 = ElasticitySet<2>;
using ElasticitySet3 = ElasticitySet<3>;

}  // namespace plastlab
