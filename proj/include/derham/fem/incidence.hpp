#pragma once

#include <vector>

#include "derham/fem/mesh.hpp"
#include "derham/sparse/csr_matrix.hpp"

namespace derham::fem {

/// Signed incidence between active entities. Edges point along increasing
/// coordinates; a face with normal e_a is circulated from e_b to e_d with
/// (a, b, d) cyclic; cells take outward face normals.
struct IncidenceMatrices {
    CsrMatrix Dgrad; // edges x nodes
    CsrMatrix Dcurl; // faces x edges
    CsrMatrix Ddiv;  // cells x faces
};

inline CsrMatrix grad_incidence(const StructuredMesh& mesh)
{
    std::vector<Triplet> t;
    t.reserve(2 * mesh.count(Entity::Edge));
    for (std::size_t e = 0; e < mesh.count(Entity::Edge); ++e) {
        const auto nodes = mesh.edge_nodes(mesh.lattice_id(Entity::Edge, e));
        t.push_back({e, mesh.active_id(Entity::Node, nodes[0]), -1.0});
        t.push_back({e, mesh.active_id(Entity::Node, nodes[1]), 1.0});
    }
    return CsrMatrix::from_triplets(t, mesh.count(Entity::Edge), mesh.count(Entity::Node));
}

inline CsrMatrix curl_incidence(const StructuredMesh& mesh)
{
    static constexpr double sign[4] = {1.0, -1.0, -1.0, 1.0};
    std::vector<Triplet> t;
    t.reserve(4 * mesh.count(Entity::Face));
    for (std::size_t f = 0; f < mesh.count(Entity::Face); ++f) {
        const auto edges = mesh.face_edges(mesh.lattice_id(Entity::Face, f));
        for (int q = 0; q < 4; ++q)
            t.push_back({f, mesh.active_id(Entity::Edge, edges[q]), sign[q]});
    }
    return CsrMatrix::from_triplets(t, mesh.count(Entity::Face), mesh.count(Entity::Edge));
}

inline CsrMatrix div_incidence(const StructuredMesh& mesh)
{
    std::vector<Triplet> t;
    t.reserve(6 * mesh.count(Entity::Cell));
    for (std::size_t c = 0; c < mesh.count(Entity::Cell); ++c) {
        const auto ijk = mesh.coord(Entity::Cell, mesh.lattice_id(Entity::Cell, c)).ijk;
        const auto faces = mesh.cell_faces(ijk[0], ijk[1], ijk[2]);
        for (int q = 0; q < 6; ++q)
            t.push_back({c, mesh.active_id(Entity::Face, faces[q]), q % 2 == 0 ? -1.0 : 1.0});
    }
    return CsrMatrix::from_triplets(t, mesh.count(Entity::Cell), mesh.count(Entity::Face));
}

inline IncidenceMatrices incidence(const StructuredMesh& mesh)
{
    return {grad_incidence(mesh), curl_incidence(mesh), div_incidence(mesh)};
}

} // namespace derham::fem
