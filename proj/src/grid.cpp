#include "plastlab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace plastlab {

namespace {

constexpr double kSnapBand = 1e-6;

const char* edge_name(int e) {
    switch (e) {
        case 0: return "bottom";
        case 1: return "right";
        case 2: return "top";
        default: return "left";
    }
}

// Segment labels of one edge from its interval list. Segment k covers the
// fraction range [k/n, (k+1)/n]; every interval endpoint must land on a node.
std::vector<BoundaryLabel> segment_labels(const std::vector<EdgeInterval>& intervals, int n,
                                          int e) {
    const std::string where = std::string("boundary partition, ") + edge_name(e) + " edge: ";
    if (intervals.empty()) throw std::invalid_argument(where + "no intervals given");
    std::vector<BoundaryLabel> seg(n, BoundaryLabel::Neumann);
    std::vector<bool> covered(n, false);
    for (const auto& iv : intervals) {
        if (iv.label == BoundaryLabel::Transition)
            throw std::invalid_argument(where + "intervals must be Dirichlet or Neumann");
        if (!(iv.begin >= -kSnapBand && iv.end <= 1.0 + kSnapBand && iv.begin < iv.end))
            throw std::invalid_argument(where + "interval fractions must satisfy 0 <= begin < end <= 1");
        const double b = iv.begin * n;
        const double t = iv.end * n;
        const int ib = static_cast<int>(std::lround(b));
        const int it = static_cast<int>(std::lround(t));
        if (std::abs(b - ib) > kSnapBand * n || std::abs(t - it) > kSnapBand * n)
            throw std::invalid_argument(where +
                                        "interval endpoints must land on grid nodes (fractions "
                                        "of the edge length in multiples of 1/cells)");
        for (int k = ib; k < it; ++k) {
            if (covered[k])
                throw std::invalid_argument(where + "intervals overlap");
            covered[k] = true;
            seg[k] = iv.label;
        }
    }
    for (int k = 0; k < n; ++k)
        if (!covered[k]) throw std::invalid_argument(where + "intervals do not cover the edge");
    return seg;
}

}  // namespace

Grid Grid::make(double Lx, double Ly, int nx, int ny) {
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw std::invalid_argument("grid: lengths must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid: cell counts must be at least 1");
    const double hx = Lx / nx;
    const double hy = Ly / ny;
    if (std::abs(hx - hy) > 1e-12 * (hx + hy))
        throw std::invalid_argument("grid: cells must be square (Lx/nx == Ly/ny)");
    Grid g;
    g.Lx = Lx;
    g.Ly = Ly;
    g.nx = nx;
    g.ny = ny;
    g.h = hx;
    return g;
}

BoundaryPartition BoundaryPartition::make(
    const Grid& g, const std::array<std::vector<EdgeInterval>, 4>& edges) {
    const int nx = g.nx;
    const int ny = g.ny;
    std::array<std::vector<BoundaryLabel>, 4> seg;
    for (int e = 0; e < 4; ++e)
        seg[e] = segment_labels(edges[e], (e == 0 || e == 2) ? nx : ny, e);

    const double s2 = 1.0 / std::sqrt(2.0);
    BoundaryPartition part;
    auto push = [&](int i, int j, const Vec<2>& nu, BoundaryLabel a, BoundaryLabel b) {
        BoundaryNode bn;
        bn.i = i;
        bn.j = j;
        bn.index = g.node(i, j);
        bn.nu = nu;
        bn.label = (a == b) ? a : BoundaryLabel::Transition;
        bn.ds = g.h;
        bn.ds_dirichlet = (a == BoundaryLabel::Dirichlet ? 0.5 * g.h : 0.0) +
                          (b == BoundaryLabel::Dirichlet ? 0.5 * g.h : 0.0);
        bn.ds_neumann = bn.ds - bn.ds_dirichlet;
        part.nodes_.push_back(bn);
    };

    // Closed loop; at each node the two adjacent boundary segments decide the
    // label. Corners pair the extreme segments of their two edges.
    push(0, 0, {-s2, -s2}, seg[3][0], seg[0][0]);
    for (int i = 1; i < nx; ++i) push(i, 0, {0.0, -1.0}, seg[0][i - 1], seg[0][i]);
    push(nx, 0, {s2, -s2}, seg[0][nx - 1], seg[1][0]);
    for (int j = 1; j < ny; ++j) push(nx, j, {1.0, 0.0}, seg[1][j - 1], seg[1][j]);
    push(nx, ny, {s2, s2}, seg[1][ny - 1], seg[2][nx - 1]);
    for (int i = nx - 1; i > 0; --i) push(i, ny, {0.0, 1.0}, seg[2][i - 1], seg[2][i]);
    push(0, ny, {-s2, s2}, seg[2][0], seg[3][ny - 1]);
    for (int j = ny - 1; j > 0; --j) push(0, j, {-1.0, 0.0}, seg[3][j - 1], seg[3][j]);
    return part;
}

BoundaryPartition BoundaryPartition::uniform(const Grid& g, BoundaryLabel label) {
    std::array<std::vector<EdgeInterval>, 4> edges;
    for (auto& e : edges) e.push_back({label, 0.0, 1.0});
    return make(g, edges);
}

}  // namespace plastlab
