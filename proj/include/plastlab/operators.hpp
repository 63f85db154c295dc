#pragma once

#include <vector>

#include "plastlab/grid.hpp"
#include "plastlab/tensor.hpp"

namespace plastlab {

// Node-based vector field ((nx+1)*(ny+1) values, row-major by j).
struct VectorField {
    int nx = 0;
    int ny = 0;
    std::vector<Vec<2>> data;

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : nx(g.nx), ny(g.ny), data(static_cast<std::size_t>(g.nnodes())) {}
    Vec<2>& at(int i, int j) { return data[static_cast<std::size_t>(j * (nx + 1) + i)]; }
    const Vec<2>& at(int i, int j) const {
        return data[static_cast<std::size_t>(j * (nx + 1) + i)];
    }
};

// Cell-based symmetric-tensor field (nx*ny values, row-major by j).
struct SymField {
    int nx = 0;
    int ny = 0;
    std::vector<SymMat<2>> data;

    SymField() = default;
    explicit SymField(const Grid& g)
        : nx(g.nx), ny(g.ny), data(static_cast<std::size_t>(g.ncells())) {}
    SymMat<2>& at(int i, int j) { return data[static_cast<std::size_t>(j * nx + i)]; }
    const SymMat<2>& at(int i, int j) const {
        return data[static_cast<std::size_t>(j * nx + i)];
    }
};

// Cell-averaged symmetric gradient of the bilinear interpolant; exact for
// affine fields.
SymField sym_gradient(const Grid& g, const VectorField& u);

// Euclidean adjoint of sym_gradient scaled by the cell area: returns the
// nodal vector field a with a . u = sum_cells sigma : sym_gradient(u) h^2
// for every u. This is the hat-function pairing integral of Div sigma.
VectorField sym_gradient_adjoint(const Grid& g, const SymField& sigma);

// Discrete divergence carrying a boundary traction: defined so that
//   sum_cells sigma : sym_gradient(u) h^2 + sum_nodes div . u w_n
//     = sum_bnodes T . u ds
// holds exactly for every u, where w_n are the lumped nodal volumes.
// T is indexed like part.nodes().
VectorField divergence_with_traction(const Grid& g, const BoundaryPartition& part,
                                     const SymField& sigma, const std::vector<Vec<2>>& T);

enum class Restrict { Dirichlet, Neumann, All };

// Trapezoid quadrature over the labelled boundary; f is indexed like
// part.nodes(). Restriction weighs each node by the length of its adjacent
// half-segments carrying that label, so a run of length L integrates the
// constant 1 to exactly L.
double boundary_quadrature(const Grid& g, const BoundaryPartition& part,
                           const std::vector<double>& f, Restrict restrict_to);

}  // namespace plastlab
