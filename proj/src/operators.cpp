#include "plastlab/operators.hpp"

#include <stdexcept>
#include <string>

namespace plastlab {

namespace {

void check_sizes(const Grid& g, int nx, int ny, const char* what) {
    if (nx != g.nx || ny != g.ny)
        throw std::invalid_argument(std::string(what) + ": field size does not match the grid");
}

}  // namespace

SymField sym_gradient(const Grid& g, const VectorField& u) {
    check_sizes(g, u.nx, u.ny, "sym_gradient");
    SymField e(g);
    const double inv = 1.0 / (2.0 * g.h);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec<2>& u00 = u.at(i, j);
            const Vec<2>& u10 = u.at(i + 1, j);
            const Vec<2>& u01 = u.at(i, j + 1);
            const Vec<2>& u11 = u.at(i + 1, j + 1);
            const double dxux = (u10[0] + u11[0] - u00[0] - u01[0]) * inv;
            const double dyuy = (u01[1] + u11[1] - u00[1] - u10[1]) * inv;
            const double dyux = (u01[0] + u11[0] - u00[0] - u10[0]) * inv;
            const double dxuy = (u10[1] + u11[1] - u00[1] - u01[1]) * inv;
            SymMat<2>& out = e.at(i, j);
            out.set(0, 0, dxux);
            out.set(1, 1, dyuy);
            out.set(0, 1, 0.5 * (dyux + dxuy));
        }
    }
    return e;
}

VectorField sym_gradient_adjoint(const Grid& g, const SymField& sigma) {
    check_sizes(g, sigma.nx, sigma.ny, "sym_gradient_adjoint");
    VectorField out(g);
    const double w = 0.5 * g.h;  // h^2 / (2h)
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const SymMat<2>& s = sigma.at(i, j);
            const double sxx = s(0, 0), sxy = s(0, 1), syy = s(1, 1);
            for (int b = 0; b <= 1; ++b) {
                const double sy = b ? 1.0 : -1.0;
                for (int a = 0; a <= 1; ++a) {
                    const double sx = a ? 1.0 : -1.0;
                    Vec<2>& o = out.at(i + a, j + b);
                    o[0] += w * (sxx * sx + sxy * sy);
                    o[1] += w * (sxy * sx + syy * sy);
                }
            }
        }
    }
    return out;
}

VectorField divergence_with_traction(const Grid& g, const BoundaryPartition& part,
                                     const SymField& sigma, const std::vector<Vec<2>>& T) {
    if (T.size() != part.size())
        throw std::invalid_argument(
            "divergence_with_traction: traction size does not match the boundary partition");
    VectorField out = sym_gradient_adjoint(g, sigma);
    for (auto& v : out.data) v = -1.0 * v;
    for (std::size_t k = 0; k < part.size(); ++k)
        out.data[static_cast<std::size_t>(part[k].index)] += part[k].ds * T[k];
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            out.at(i, j) = (1.0 / g.node_volume(i, j)) * out.at(i, j);
        }
    }
    return out;
}

double boundary_quadrature(const Grid& g, const BoundaryPartition& part,
                           const std::vector<double>& f, Restrict restrict_to) {
    (void)g;
    if (f.size() != part.size())
        throw std::invalid_argument(
            "boundary_quadrature: integrand size does not match the boundary partition");
    double sum = 0.0;
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BoundaryNode& b = part[k];
        double w = b.ds;
        if (restrict_to == Restrict::Dirichlet) w = b.ds_dirichlet;
        if (restrict_to == Restrict::Neumann) w = b.ds_neumann;
        sum += w * f[k];
    }
    return sum;
}

}  // namespace plastlab
