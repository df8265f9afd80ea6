#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "derham/fem/mesh.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham::fem {

enum class FormDegree { Node = 0, Edge = 1, Face = 2, Cell = 3 };

namespace detail {

inline double hat(std::size_t side, double t) { return side == 0 ? 1.0 - t : t; }

/// Value of each local basis function at reference point x (in [0,1]^3) and
/// the axis of its only nonzero component. The functions are O(1): the cell
/// function is the indicator, edge and face functions have unit tangential
/// or normal component at their own entity. The exterior derivative then acts
/// by the signed incidence matrices divided by h.
struct LocalBasis {
    std::vector<int> axis;
    std::vector<double> value;
};

inline LocalBasis local_basis(FormDegree deg, const std::array<double, 3>& x)
{
    LocalBasis b;
    switch (deg) {
    case FormDegree::Node:
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t bb = 0; bb < 2; ++bb)
                for (std::size_t a = 0; a < 2; ++a) {
                    b.axis.push_back(0);
                    b.value.push_back(hat(a, x[0]) * hat(bb, x[1]) * hat(c, x[2]));
                }
        break;
    case FormDegree::Edge:
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t u = static_cast<std::size_t>((axis + 1) % 3), v = static_cast<std::size_t>((axis + 2) % 3);
            // Transverse offsets are listed in coordinate order, matching
            // StructuredMesh::cell_edges.
            const std::size_t lo = std::min(u, v), hi = std::max(u, v);
            for (std::size_t t = 0; t < 4; ++t) {
                b.axis.push_back(axis);
                b.value.push_back(hat(t & 1, x[lo]) * hat(t >> 1, x[hi]));
            }
        }
        break;
    case FormDegree::Face:
        for (int axis = 0; axis < 3; ++axis)
            for (std::size_t side = 0; side < 2; ++side) {
                b.axis.push_back(axis);
                b.value.push_back(hat(side, x[static_cast<std::size_t>(axis)]));
            }
        break;
    case FormDegree::Cell:
        b.axis.push_back(0);
        b.value.push_back(1.0);
        break;
    }
    return b;
}

} // namespace detail

inline Entity entity_of(FormDegree d) { return static_cast<Entity>(static_cast<int>(d)); }

/// Galerkin mass matrix on active entities, assembled cell by cell with the
/// 2-point Gauss rule per axis (exact for these polynomial products).
inline CsrMatrix assemble_mass(const StructuredMesh& mesh, FormDegree deg)
{
    const double h = mesh.h();
    const double g = 0.5 / std::sqrt(3.0);
    const std::array<double, 2> pts{0.5 - g, 0.5 + g};
    const double w = h * h * h / 8.0;

    // The local matrix is the same on every cell.
    std::vector<double> local;
    std::size_t nloc = 0;
    for (double z : pts)
        for (double y : pts)
            for (double x : pts) {
                const auto b = detail::local_basis(deg, {x, y, z});
                nloc = b.value.size();
                local.resize(nloc * nloc, 0.0);
                for (std::size_t p = 0; p < nloc; ++p)
                    for (std::size_t q = p; q < nloc; ++q)
                        if (b.axis[p] == b.axis[q]) {
                            const double v = w * b.value[p] * b.value[q];
                            local[p * nloc + q] += v;
                            if (q != p)
                                local[q * nloc + p] += v;
                        }
            }

    const Entity ent = entity_of(deg);
    std::vector<Triplet> t;
    t.reserve(mesh.count(Entity::Cell) * nloc * nloc);
    std::vector<std::size_t> ids(nloc);
    for (std::size_t c = 0; c < mesh.count(Entity::Cell); ++c) {
        const std::size_t lat = mesh.lattice_id(Entity::Cell, c);
        const auto ijk = mesh.coord(Entity::Cell, lat).ijk;
        switch (deg) {
        case FormDegree::Node: {
            const auto v = mesh.cell_nodes(ijk[0], ijk[1], ijk[2]);
            std::copy(v.begin(), v.end(), ids.begin());
            break;
        }
        case FormDegree::Edge: {
            const auto v = mesh.cell_edges(ijk[0], ijk[1], ijk[2]);
            std::copy(v.begin(), v.end(), ids.begin());
            break;
        }
        case FormDegree::Face: {
            const auto v = mesh.cell_faces(ijk[0], ijk[1], ijk[2]);
            std::copy(v.begin(), v.end(), ids.begin());
            break;
        }
        case FormDegree::Cell: ids[0] = lat; break;
        }
        for (std::size_t p = 0; p < nloc; ++p)
            for (std::size_t q = 0; q < nloc; ++q)
                if (local[p * nloc + q] != 0.0)
                    t.push_back({mesh.active_id(ent, ids[p]), mesh.active_id(ent, ids[q]), local[p * nloc + q]});
    }
    const std::size_t n = mesh.count(ent);
    return CsrMatrix::from_triplets(t, n, n);
}

} // namespace derham::fem
