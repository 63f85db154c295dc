#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "plastlab/grid.hpp"
#include "plastlab/operators.hpp"

using namespace plastlab;
using namespace plastlab::testing;

namespace {

// Independent oracle for the cell-averaged gradient: evaluate the analytic
// gradient of the bilinear interpolant at 2x2 Gauss points and average.
// The gradient of a bilinear function is linear, so this quadrature is exact.
SymMat<2> cell_gradient_oracle(const Grid& g, const VectorField& u, int ci, int cj) {
    const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    SymMat<2> acc{};
    for (double ay : gp) {
        for (double ax : gp) {
            // d/dx and d/dy of the four bilinear basis functions at (ax, ay).
            double du[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // du[comp][axis]
            for (int b = 0; b <= 1; ++b) {
                for (int a = 0; a <= 1; ++a) {
                    const double phix = a ? ax : 1.0 - ax;
                    const double phiy = b ? ay : 1.0 - ay;
                    const double dphix = (a ? 1.0 : -1.0) / g.h;
                    const double dphiy = (b ? 1.0 : -1.0) / g.h;
                    const Vec<2>& un = u.at(ci + a, cj + b);
                    for (int c = 0; c < 2; ++c) {
                        du[c][0] += un[c] * dphix * phiy;
                        du[c][1] += un[c] * phix * dphiy;
                    }
                }
            }
            SymMat<2> e{};
            e.set(0, 0, du[0][0]);
            e.set(1, 1, du[1][1]);
            e.set(0, 1, 0.5 * (du[0][1] + du[1][0]));
            acc += e;
        }
    }
    return 0.25 * acc;
}

VectorField random_field(const Grid& g) {
    VectorField u(g);
    for (auto& v : u.data) v = random_vec<2>();
    return u;
}

SymField random_sym_field(const Grid& g) {
    SymField s(g);
    for (auto& m : s.data) m = random_sym<2>();
    return s;
}

std::array<std::vector<EdgeInterval>, 4> mixed_edges() {
    std::array<std::vector<EdgeInterval>, 4> edges;
    edges[0] = {{BoundaryLabel::Dirichlet, 0.0, 1.0}};
    edges[1] = {{BoundaryLabel::Neumann, 0.0, 0.5}, {BoundaryLabel::Dirichlet, 0.5, 1.0}};
    edges[2] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    edges[3] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    return edges;
}

}  // namespace

TEST_CASE("grid construction validates its inputs") {
    CHECK_THROWS_AS(Grid::make(0.0, 1.0, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 1.0, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 2.0, 4, 4), std::invalid_argument);  // non-square cells
    const Grid g = Grid::make(2.0, 1.0, 8, 4);
    CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.nnodes() == 9 * 5);
    CHECK(g.ncells() == 32);
}

TEST_CASE("nodal volumes sum to the area and split as hat masses") {
    const Grid g = Grid::make(1.0, 1.0, 7, 7);
    double total = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) total += g.node_volume(i, j);
    CHECK(total == doctest::Approx(g.Lx * g.Ly).epsilon(1e-14));
    CHECK(g.node_volume(3, 3) == doctest::Approx(g.h * g.h));
    CHECK(g.node_volume(0, 3) == doctest::Approx(0.5 * g.h * g.h));
    CHECK(g.node_volume(0, 0) == doctest::Approx(0.25 * g.h * g.h));
}

TEST_CASE("symmetric gradient vanishes on constants and reproduces affine fields") {
    const Grid g = Grid::make(1.0, 1.0, 6, 6);
    VectorField u(g);
    for (auto& v : u.data) v = Vec<2>{3.5, -1.25};
    SymField e = sym_gradient(g, u);
    for (const auto& m : e.data) CHECK(norm(m) == 0.0);

    for (int trial = 0; trial < 20; ++trial) {
        const double m00 = uniform(-2, 2), m01 = uniform(-2, 2);
        const double m10 = uniform(-2, 2), m11 = uniform(-2, 2);
        for (int j = 0; j <= g.ny; ++j) {
            for (int i = 0; i <= g.nx; ++i) {
                const Vec<2> x = g.node_pos(i, j);
                u.at(i, j) = Vec<2>{m00 * x[0] + m01 * x[1], m10 * x[0] + m11 * x[1]};
            }
        }
        SymMat<2> expect{};
        expect.set(0, 0, m00);
        expect.set(1, 1, m11);
        expect.set(0, 1, 0.5 * (m01 + m10));
        e = sym_gradient(g, u);
        for (const auto& m : e.data) CHECK(norm(m - expect) <= 1e-13 * (1.0 + norm(expect)));
    }
}

TEST_CASE("symmetric gradient matches the quadrature oracle on random fields") {
    const Grid g = Grid::make(1.0, 1.0, 9, 9);
    const VectorField u = random_field(g);
    const SymField e = sym_gradient(g, u);
    for (int cj = 0; cj < g.ny; ++cj) {
        for (int ci = 0; ci < g.nx; ++ci) {
            const SymMat<2> oracle = cell_gradient_oracle(g, u, ci, cj);
            CHECK(norm(e.at(ci, cj) - oracle) <= 1e-13 * (1.0 + norm(oracle)));
        }
    }
}

TEST_CASE("adjoint pairing identity holds to machine precision") {
    const Grid g = Grid::make(1.0, 1.0, 12, 12);
    for (int trial = 0; trial < 10; ++trial) {
        const VectorField u = random_field(g);
        const SymField s = random_sym_field(g);
        const SymField e = sym_gradient(g, u);
        double lhs = 0.0;
        for (std::size_t c = 0; c < s.data.size(); ++c)
            lhs += ddot(s.data[c], e.data[c]) * g.h * g.h;
        const VectorField a = sym_gradient_adjoint(g, s);
        double rhs = 0.0;
        for (std::size_t n = 0; n < a.data.size(); ++n) rhs += dot(a.data[n], u.data[n]);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("discrete integration by parts is exact for random stress, velocity, traction") {
    for (int n : {16, 64, 128}) {
        const Grid g = Grid::make(1.0, 1.0, n, n);
        const BoundaryPartition part = BoundaryPartition::make(g, mixed_edges());
        for (int trial = 0; trial < 3; ++trial) {
            const VectorField u = random_field(g);
            const SymField s = random_sym_field(g);
            std::vector<Vec<2>> T(part.size());
            for (auto& t : T) t = random_vec<2>();

            const SymField e = sym_gradient(g, u);
            const VectorField div = divergence_with_traction(g, part, s, T);

            double vol = 0.0, scale = 0.0;
            for (std::size_t c = 0; c < s.data.size(); ++c) {
                const double term = ddot(s.data[c], e.data[c]) * g.h * g.h;
                vol += term;
                scale += std::abs(term);
            }
            for (int j = 0; j <= g.ny; ++j) {
                for (int i = 0; i <= g.nx; ++i) {
                    const double term = dot(div.at(i, j), u.at(i, j)) * g.node_volume(i, j);
                    vol += term;
                    scale += std::abs(term);
                }
            }
            double bdry = 0.0;
            for (std::size_t k = 0; k < part.size(); ++k) {
                const double term = dot(T[k], u.data[static_cast<std::size_t>(part[k].index)]) *
                                    part[k].ds;
                bdry += term;
                scale += std::abs(term);
            }
            CHECK(std::abs(vol - bdry) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("constant stress with matching traction is in discrete equilibrium") {
    const Grid g = Grid::make(1.0, 1.0, 10, 10);
    const BoundaryPartition part = BoundaryPartition::uniform(g, BoundaryLabel::Neumann);
    const SymMat<2> sig = random_sym<2>();
    SymField s(g);
    for (auto& m : s.data) m = sig;
    std::vector<Vec<2>> T(part.size());
    for (std::size_t k = 0; k < part.size(); ++k) T[k] = apply(sig, part[k].nu);
    const VectorField div = divergence_with_traction(g, part, s, T);
    // Interior and edge nodes balance exactly; the corner convention (unit
    // diagonal normal with full trapezoid weight) leaves a corner residual.
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            const bool corner = (i == 0 || i == g.nx) && (j == 0 || j == g.ny);
            if (corner) continue;
            CHECK(norm(div.at(i, j)) <= 1e-12 * (1.0 + norm(sig)) / g.h);
        }
    }
    // With zero stress and zero traction everything vanishes identically.
    SymField z(g);
    std::vector<Vec<2>> zero_T(part.size());
    const VectorField div0 = divergence_with_traction(g, part, z, zero_T);
    for (const auto& v : div0.data) CHECK(norm(v) == 0.0);
}

TEST_CASE("boundary quadrature integrates constants and linears exactly") {
    const Grid g = Grid::make(2.0, 1.0, 16, 8);
    std::array<std::vector<EdgeInterval>, 4> edges;
    edges[0] = {{BoundaryLabel::Dirichlet, 0.0, 1.0}};  // bottom edge fully Dirichlet
    edges[1] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    edges[2] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    edges[3] = {{BoundaryLabel::Neumann, 0.0, 1.0}};
    const BoundaryPartition part = BoundaryPartition::make(g, edges);

    std::vector<double> ones(part.size(), 1.0);
    CHECK(boundary_quadrature(g, part, ones, Restrict::All) ==
          doctest::Approx(2.0 * (g.Lx + g.Ly)).epsilon(1e-13));
    CHECK(boundary_quadrature(g, part, ones, Restrict::Dirichlet) ==
          doctest::Approx(g.Lx).epsilon(1e-13));
    CHECK(boundary_quadrature(g, part, ones, Restrict::Neumann) ==
          doctest::Approx(2.0 * g.Ly + g.Lx).epsilon(1e-13));

    // f = x restricted to the Dirichlet bottom edge: integral = Lx^2 / 2.
    std::vector<double> f(part.size(), 0.0);
    for (std::size_t k = 0; k < part.size(); ++k)
        f[k] = g.node_pos(part[k].i, part[k].j)[0];
    CHECK(boundary_quadrature(g, part, f, Restrict::Dirichlet) ==
          doctest::Approx(0.5 * g.Lx * g.Lx).epsilon(1e-13));
}

TEST_CASE("boundary partition labels nodes, transitions, and corner normals") {
    const Grid g = Grid::make(1.0, 1.0, 8, 8);
    const BoundaryPartition part = BoundaryPartition::make(g, mixed_edges());

    int n_trans = 0;
    for (const auto& b : part.nodes()) {
        CHECK(b.ds == doctest::Approx(g.h));
        CHECK(b.ds_dirichlet + b.ds_neumann == doctest::Approx(b.ds));
        CHECK(norm(b.nu) == doctest::Approx(1.0).epsilon(1e-14));
        if (b.label == BoundaryLabel::Transition) ++n_trans;
        if (b.i == 4 && b.j == 0) CHECK(b.label == BoundaryLabel::Dirichlet);
        if (b.i == 8 && b.j == 4) CHECK(b.label == BoundaryLabel::Transition);  // mid right
        if (b.i == 8 && b.j == 6) CHECK(b.label == BoundaryLabel::Dirichlet);
        if (b.i == 4 && b.j == 8) CHECK(b.label == BoundaryLabel::Neumann);
        if (b.i == 0 && b.j == 0) {  // bottom D, left N -> transition corner
            CHECK(b.label == BoundaryLabel::Transition);
            CHECK(b.nu[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
            CHECK(b.nu[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
        }
        if (b.i == 0 && b.j == 8) CHECK(b.label == BoundaryLabel::Neumann);  // N-N corner
    }
    // Transition set is finite and small: two label changes plus two corners.
    CHECK(n_trans == 4);
    CHECK(part.size() == 4u * 8u);

    // Every boundary node appears exactly once.
    std::vector<int> seen(static_cast<std::size_t>(g.nnodes()), 0);
    for (const auto& b : part.nodes()) seen[static_cast<std::size_t>(b.index)]++;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            CHECK(seen[static_cast<std::size_t>(g.node(i, j))] ==
                  (g.boundary_node(i, j) ? 1 : 0));
}

TEST_CASE("boundary partition rejects malformed interval lists") {
    const Grid g = Grid::make(1.0, 1.0, 16, 16);
    std::array<std::vector<EdgeInterval>, 4> edges;
    for (auto& e : edges) e = {{BoundaryLabel::Neumann, 0.0, 1.0}};

    auto bad = edges;
    bad[0] = {{BoundaryLabel::Dirichlet, 0.0, 0.53}, {BoundaryLabel::Neumann, 0.53, 1.0}};
    CHECK_THROWS_WITH_AS(BoundaryPartition::make(g, bad),
                         doctest::Contains("land on grid nodes"), std::invalid_argument);

    bad = edges;
    bad[1] = {{BoundaryLabel::Dirichlet, 0.0, 0.5}};
    CHECK_THROWS_WITH_AS(BoundaryPartition::make(g, bad), doctest::Contains("do not cover"),
                         std::invalid_argument);

    bad = edges;
    bad[2] = {{BoundaryLabel::Dirichlet, 0.0, 0.75}, {BoundaryLabel::Neumann, 0.5, 1.0}};
    CHECK_THROWS_WITH_AS(BoundaryPartition::make(g, bad), doctest::Contains("overlap"),
                         std::invalid_argument);

    bad = edges;
    bad[3] = {{BoundaryLabel::Transition, 0.0, 1.0}};
    CHECK_THROWS_WITH_AS(BoundaryPartition::make(g, bad),
                         doctest::Contains("Dirichlet or Neumann"), std::invalid_argument);
}
