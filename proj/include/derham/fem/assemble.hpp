#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "derham/constrained/system.hpp"
#include "derham/fem/incidence.hpp"
#include "derham/fem/mass.hpp"
#include "derham/fem/mesh.hpp"

namespace derham::fem {

enum class ProblemType { Maxwell, GradDiv };
enum class BoundaryCondition { Dirichlet, Neumann };

inline const char* to_string(ProblemType p) { return p == ProblemType::Maxwell ? "maxwell" : "graddiv"; }
inline const char* to_string(BoundaryCondition b) { return b == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann"; }

inline ProblemType parse_problem(const std::string& s)
{
    if (s == "maxwell")
        return ProblemType::Maxwell;
    if (s == "graddiv")
        return ProblemType::GradDiv;
    throw InvalidArgument("unknown problem '" + s + "' (expected maxwell or graddiv)");
}

inline BoundaryCondition parse_bc(const std::string& s)
{
    if (s == "dirichlet")
        return BoundaryCondition::Dirichlet;
    if (s == "neumann")
        return BoundaryCondition::Neumann;
    throw InvalidArgument("unknown boundary condition '" + s + "' (expected dirichlet or neumann)");
}

/// Betti number of the domain in the degree that governs dim C0: b1 for the
/// Maxwell Neumann problem, b2 for grad-div Neumann and for Maxwell Dirichlet
/// (relative cohomology, by duality).
inline std::size_t predicted_dim_c0(DomainShape shape, ProblemType problem, BoundaryCondition bc)
{
    const bool tunnel = shape == DomainShape::CubeTunnel, hole = shape == DomainShape::CubeVoid;
    if (problem == ProblemType::Maxwell && bc == BoundaryCondition::Neumann)
        return tunnel ? 1 : 0;
    return hole ? 1 : 0;
}

struct AssembledProblem {
    StructuredMesh mesh;
    ConstrainedSystem system;
    ProblemType problem = ProblemType::Maxwell;
    BoundaryCondition bc = BoundaryCondition::Neumann;
    /// Active-entity ids (within the mesh numbering) of the retained u and p
    /// unknowns, in system order.
    std::vector<std::size_t> u_dofs;
    std::vector<std::size_t> p_dofs;
    Entity u_entity = Entity::Edge;
    Entity p_entity = Entity::Node;
    /// Incidence from p-space to u-space on the retained DOFs (B = M_u D_pu / h).
    CsrMatrix D_pu;
    std::size_t predicted_dim_c0 = 0;
};

/// Boundary flags per active entity of the given kind: faces with exactly one
/// active neighbouring cell, and the edges and nodes on them.
inline std::vector<bool> boundary_flags(const StructuredMesh& mesh, Entity e)
{
    std::vector<bool> face(mesh.count(Entity::Face), false), edge(mesh.count(Entity::Edge), false),
        node(mesh.count(Entity::Node), false);
    for (std::size_t f = 0; f < face.size(); ++f) {
        const std::size_t lat = mesh.lattice_id(Entity::Face, f);
        const auto cells = mesh.face_cells(lat);
        if ((cells[0] == StructuredMesh::npos) == (cells[1] == StructuredMesh::npos))
            continue;
        face[f] = true;
        for (std::size_t el : mesh.face_edges(lat)) {
            edge[mesh.active_id(Entity::Edge, el)] = true;
            for (std::size_t nl : mesh.edge_nodes(el))
                node[mesh.active_id(Entity::Node, nl)] = true;
        }
    }
    switch (e) {
    case Entity::Node: return node;
    case Entity::Edge: return edge;
    case Entity::Face: return face;
    case Entity::Cell: return std::vector<bool>(mesh.count(Entity::Cell), false);
    }
    return {};
}

inline std::vector<std::size_t> retained(const StructuredMesh& mesh, Entity e, bool drop_boundary)
{
    std::vector<std::size_t> keep;
    const auto bnd = drop_boundary ? boundary_flags(mesh, e) : std::vector<bool>(mesh.count(e), false);
    for (std::size_t i = 0; i < mesh.count(e); ++i)
        if (!bnd[i])
            keep.push_back(i);
    return keep;
}

namespace detail {

/// Doubled midpoint of an entity, in lattice units.
inline std::array<std::size_t, 3> midpoint2(const StructuredMesh& mesh, Entity e, std::size_t active)
{
    const EntityCoord c = mesh.coord(e, mesh.lattice_id(e, active));
    std::array<std::size_t, 3> m{2 * c.ijk[0], 2 * c.ijk[1], 2 * c.ijk[2]};
    for (std::size_t q = 0; q < 3; ++q) {
        const bool along = static_cast<int>(q) == c.axis;
        if ((e == Entity::Edge && along) || (e == Entity::Face && !along) || e == Entity::Cell)
            ++m[q];
    }
    return m;
}

/// The DOFs sorted by midpoint, z slowest and x fastest. Neighbouring
/// unknowns of every orientation end up close in the numbering, which is what
/// ILU(0) needs to capture the coupling between them.
inline std::vector<std::size_t> geometric_order(const StructuredMesh& mesh, Entity e, std::vector<std::size_t> dofs)
{
    std::vector<std::array<std::size_t, 3>> key(mesh.count(e));
    for (std::size_t d : dofs)
        key[d] = midpoint2(mesh, e, d);
    std::sort(dofs.begin(), dofs.end(), [&](std::size_t a, std::size_t b) {
        const auto &ka = key[a], &kb = key[b];
        return std::tie(ka[2], ka[1], ka[0]) < std::tie(kb[2], kb[1], kb[0]);
    });
    return dofs;
}

/// Rows and columns of A picked out in the given orders.
inline CsrMatrix select(const CsrMatrix& A, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols)
{
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> rpos(A.rows(), none), cpos(A.cols(), none);
    for (std::size_t i = 0; i < rows.size(); ++i)
        rpos[rows[i]] = i;
    for (std::size_t j = 0; j < cols.size(); ++j)
        cpos[cols[j]] = j;
    std::vector<Triplet> t;
    for (const Triplet& x : A.to_triplets())
        if (rpos[x.row] != none && cpos[x.col] != none)
            t.push_back({rpos[x.row], cpos[x.col], x.value});
    return CsrMatrix::from_triplets(t, rows.size(), cols.size());
}

} // namespace detail

/// Maxwell (k = 1): A = Dcurl^T M_face Dcurl, B = M_edge Dgrad, M = M_edge.
/// GradDiv (k = 2): A = Ddiv^T M_cell Ddiv, B = M_face Dcurl, M = M_face.
/// The derivatives are the incidence matrices over h (O(1) basis functions).
/// Dirichlet deletes the rows and columns of boundary DOFs; Neumann keeps all.
/// Unknowns are numbered by midpoint (detail::geometric_order).
/// U defaults to (5 / h^3) I. F and G are left zero.
inline AssembledProblem assemble_system(const StructuredMesh& mesh, ProblemType problem, BoundaryCondition bc,
                                        double c, std::optional<double> u_scale = std::nullopt)
{
    if (problem == ProblemType::GradDiv && bc == BoundaryCondition::Dirichlet)
        throw InvalidArgument("assemble_system: grad-div with Dirichlet conditions is not an available combination");
    if (!(c >= 0.0))
        throw InvalidArgument("assemble_system: c must be nonnegative");

    const bool dir = bc == BoundaryCondition::Dirichlet;
    const IncidenceMatrices D = incidence(mesh);
    AssembledProblem out{mesh, {}, problem, bc, {}, {}, Entity::Edge, Entity::Node, {}, 0};
    out.predicted_dim_c0 = predicted_dim_c0(mesh.shape(), problem, bc);

    const CsrMatrix* Dk = nullptr;   // u-space -> next space
    const CsrMatrix* Dkm1 = nullptr; // p-space -> u-space
    FormDegree udeg{}, nextdeg{};
    if (problem == ProblemType::Maxwell) {
        out.u_entity = Entity::Edge;
        out.p_entity = Entity::Node;
        Dk = &D.Dcurl;
        Dkm1 = &D.Dgrad;
        udeg = FormDegree::Edge;
        nextdeg = FormDegree::Face;
    } else {
        out.u_entity = Entity::Face;
        out.p_entity = Entity::Edge;
        Dk = &D.Ddiv;
        Dkm1 = &D.Dcurl;
        udeg = FormDegree::Face;
        nextdeg = FormDegree::Cell;
    }

    out.u_dofs = detail::geometric_order(mesh, out.u_entity, retained(mesh, out.u_entity, dir));
    out.p_dofs = detail::geometric_order(mesh, out.p_entity, retained(mesh, out.p_entity, dir));
    std::vector<std::size_t> all_next(mesh.count(entity_of(nextdeg)));
    for (std::size_t i = 0; i < all_next.size(); ++i)
        all_next[i] = i;

    const CsrMatrix Mu_full = assemble_mass(mesh, udeg);
    const CsrMatrix Mnext = assemble_mass(mesh, nextdeg);
    const CsrMatrix Mu = detail::select(Mu_full, out.u_dofs, out.u_dofs);
    const CsrMatrix Dk_kept = detail::select(*Dk, all_next, out.u_dofs);
    out.D_pu = detail::select(*Dkm1, out.u_dofs, out.p_dofs);

    const double h = mesh.h();
    auto A = scaled(1.0 / (h * h), multiply(multiply(transpose(Dk_kept), Mnext), Dk_kept));
    auto B = scaled(1.0 / h, multiply(Mu, out.D_pu));
    const double alpha = u_scale.value_or(5.0 / (h * h * h));
    if (!(alpha > 0.0))
        throw InvalidArgument("assemble_system: U scale must be positive");

    ConstrainedSystem& s = out.system;
    s.A = std::make_shared<const CsrMatrix>(std::move(A));
    s.B = std::make_shared<const CsrMatrix>(std::move(B));
    s.M = std::make_shared<const CsrMatrix>(Mu);
    s.U = std::make_shared<const CsrMatrix>(CsrMatrix::identity(out.p_dofs.size(), alpha));
    s.c = c;
    s.F.assign(out.u_dofs.size(), 0.0);
    s.G.assign(out.p_dofs.size(), 0.0);
    return out;
}

struct ExamplePreset {
    int number = 1;
    DomainShape shape = DomainShape::Cube;
    ProblemType problem = ProblemType::Maxwell;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    double c = 0.0;
};

inline ExamplePreset example_preset(int number)
{
    switch (number) {
    case 1: return {1, DomainShape::Cube, ProblemType::Maxwell, BoundaryCondition::Dirichlet, 0.0};
    case 2: return {2, DomainShape::Cube, ProblemType::Maxwell, BoundaryCondition::Neumann, 0.0};
    case 3: return {3, DomainShape::CubeTunnel, ProblemType::Maxwell, BoundaryCondition::Neumann, 1.0};
    case 4: return {4, DomainShape::Cube, ProblemType::GradDiv, BoundaryCondition::Neumann, 0.0};
    case 5: return {5, DomainShape::CubeVoid, ProblemType::GradDiv, BoundaryCondition::Neumann, 1.0};
    default: throw InvalidArgument("example must be 1 to 5, got " + std::to_string(number));
    }
}

inline AssembledProblem assemble_example(int number, std::size_t n)
{
    const ExamplePreset p = example_preset(number);
    return assemble_system(build_mesh({p.shape, n}), p.problem, p.bc, p.c);
}

} // namespace derham::fem
