#pragma once

#include <array>
#include <vector>

#include "plastlab/tensor.hpp"

namespace plastlab {

// Uniform square-cell grid on [0, Lx] x [0, Ly]. Displacement and velocity
// live at the (nx+1)*(ny+1) cell corners ("nodes"); strain, plastic strain,
// and stress live at the nx*ny cell centers ("cells").
struct Grid {
    double Lx = 1.0;
    double Ly = 1.0;
    int nx = 1;
    int ny = 1;
    double h = 1.0;

    // Validates positivity and that both directions share the same spacing.
    static Grid make(double Lx, double Ly, int nx, int ny);

    int nnodes() const { return (nx + 1) * (ny + 1); }
    int ncells() const { return nx * ny; }
    int node(int i, int j) const { return j * (nx + 1) + i; }
    int cell(int i, int j) const { return j * nx + i; }
    Vec<2> node_pos(int i, int j) const { return {i * h, j * h}; }
    Vec<2> cell_center(int i, int j) const { return {(i + 0.5) * h, (j + 0.5) * h}; }
    bool boundary_node(int i, int j) const {
        return i == 0 || j == 0 || i == nx || j == ny;
    }

    // Lumped nodal volume of the bilinear hat function: h^2 at interior
    // nodes, h^2/2 on edges, h^2/4 at corners. Using the exact hat masses
    // instead of a uniform h^2 keeps the discrete integration by parts exact
    // up to the boundary.
    double node_volume(int i, int j) const {
        double w = h * h;
        if (i == 0 || i == nx) w *= 0.5;
        if (j == 0 || j == ny) w *= 0.5;
        return w;
    }
};

enum class BoundaryLabel { Dirichlet, Neumann, Transition };

// One boundary node of the closed loop around the rectangle.
struct BoundaryNode {
    int i = 0;
    int j = 0;
    int index = 0;            // flat node index in the grid
    Vec<2> nu{};              // outward unit normal; diagonal at corners
    BoundaryLabel label = BoundaryLabel::Neumann;
    double ds = 0.0;          // trapezoid weight on the closed loop (= h)
    double ds_dirichlet = 0.0;  // portion of ds on Dirichlet-labelled segments
    double ds_neumann = 0.0;    // portion of ds on Neumann-labelled segments
};

// A labelled interval of one edge, in fractions of that edge's length.
// Interval endpoints must land on grid nodes (within a snapping band).
struct EdgeInterval {
    BoundaryLabel label = BoundaryLabel::Neumann;  // Dirichlet or Neumann
    double begin = 0.0;
    double end = 1.0;
};

// Edge order: bottom (y=0), right (x=Lx), top (y=Ly), left (x=0); bottom and
// top are parametrized by increasing x, right and left by increasing y.
enum class Edge { Bottom = 0, Right = 1, Top = 2, Left = 3 };

// Labels every boundary node from per-edge interval lists. Nodes where the
// label changes (including corners whose two edges disagree) become
// Transition nodes; they form the finite transition set between the
// Dirichlet and Neumann regions.
class BoundaryPartition {
public:
    static BoundaryPartition make(const Grid& g,
                                  const std::array<std::vector<EdgeInterval>, 4>& edges);
    static BoundaryPartition uniform(const Grid& g, BoundaryLabel label);

    // Nodes in closed-loop order: bottom left-to-right, right bottom-to-top,
    // top right-to-left, left top-to-bottom; each boundary node once.
    const std::vector<BoundaryNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    const BoundaryNode& operator[](std::size_t k) const { return nodes_[k]; }

private:
    BoundaryPartition() = default;
    std::vector<BoundaryNode> nodes_;
};

}  // namespace plastlab
