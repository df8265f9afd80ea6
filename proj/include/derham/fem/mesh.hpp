#pragma once

#include <array>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "derham/errors.hpp"

namespace derham::fem {

enum class DomainShape { Cube, CubeTunnel, CubeVoid };

inline const char* to_string(DomainShape s)
{
    switch (s) {
    case DomainShape::Cube: return "cube";
    case DomainShape::CubeTunnel: return "tunnel";
    case DomainShape::CubeVoid: return "void";
    }
    return "?";
}

inline DomainShape parse_domain(const std::string& s)
{
    if (s == "cube")
        return DomainShape::Cube;
    if (s == "tunnel")
        return DomainShape::CubeTunnel;
    if (s == "void")
        return DomainShape::CubeVoid;
    throw InvalidArgument("unknown domain '" + s + "' (expected cube, tunnel or void)");
}

struct DomainSpec {
    DomainShape shape = DomainShape::Cube;
    std::size_t cells_per_axis = 8;
    double side = std::numbers::pi;
};

/// Node, edge, face and cell entities of the n x n x n lattice.
enum class Entity { Node = 0, Edge = 1, Face = 2, Cell = 3 };

/// Lattice position of an entity. `axis` is the edge direction or the face
/// normal and is 0 for nodes and cells.
struct EntityCoord {
    int axis = 0;
    std::array<std::size_t, 3> ijk{};
};

/// Uniform hexahedral mesh of [0, side]^3 with optional cavities. Lattice
/// numbering is lexicographic with x fastest; edges and faces come in three
/// blocks ordered by axis. Active entities are those touching an active cell
/// and are numbered compactly in lattice order.
class StructuredMesh {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    explicit StructuredMesh(const DomainSpec& spec) : spec_(spec), n_(spec.cells_per_axis)
    {
        if (n_ < 1)
            throw InvalidArgument("build_mesh: at least one cell per axis is required");
        if (!(spec.side > 0.0))
            throw InvalidArgument("build_mesh: side must be positive");
        if (spec.shape != DomainShape::Cube && n_ % 4 != 0)
            throw InvalidArgument("build_mesh: cavity domains need cells_per_axis divisible by 4, got " +
                                  std::to_string(n_));
        h_ = spec.side / static_cast<double>(n_);

        active_cell_.assign(n_ * n_ * n_, true);
        const std::size_t lo = n_ / 4, hi = 3 * n_ / 4;
        auto inside = [&](std::size_t v) { return v >= lo && v < hi; };
        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t i = 0; i < n_; ++i) {
                    bool hole = false;
                    if (spec.shape == DomainShape::CubeTunnel)
                        hole = inside(i) && inside(j);
                    else if (spec.shape == DomainShape::CubeVoid)
                        hole = inside(i) && inside(j) && inside(k);
                    active_cell_[cell_index(i, j, k)] = !hole;
                }

        std::array<std::vector<bool>, 4> used;
        for (int e = 0; e < 4; ++e)
            used[e].assign(lattice_count(static_cast<Entity>(e)), false);
        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t i = 0; i < n_; ++i) {
                    if (!active_cell_[cell_index(i, j, k)])
                        continue;
                    used[3][cell_index(i, j, k)] = true;
                    for (std::size_t v : cell_nodes(i, j, k))
                        used[0][v] = true;
                    for (std::size_t v : cell_edges(i, j, k))
                        used[1][v] = true;
                    for (std::size_t v : cell_faces(i, j, k))
                        used[2][v] = true;
                }
        for (int e = 0; e < 4; ++e) {
            to_active_[e].assign(used[e].size(), npos);
            for (std::size_t l = 0; l < used[e].size(); ++l)
                if (used[e][l]) {
                    to_active_[e][l] = from_active_[e].size();
                    from_active_[e].push_back(l);
                }
        }
    }

    const DomainSpec& spec() const noexcept { return spec_; }
    DomainShape shape() const noexcept { return spec_.shape; }
    std::size_t n() const noexcept { return n_; }
    double h() const noexcept { return h_; }
    double side() const noexcept { return spec_.side; }

    std::size_t lattice_count(Entity e) const
    {
        const std::size_t n = n_, m = n_ + 1;
        switch (e) {
        case Entity::Node: return m * m * m;
        case Entity::Edge: return 3 * n * m * m;
        case Entity::Face: return 3 * n * n * m;
        case Entity::Cell: return n * n * n;
        }
        return 0;
    }

    std::size_t count(Entity e) const { return from_active_[static_cast<int>(e)].size(); }
    std::size_t active_id(Entity e, std::size_t lattice) const { return to_active_[static_cast<int>(e)][lattice]; }
    std::size_t lattice_id(Entity e, std::size_t active) const { return from_active_[static_cast<int>(e)][active]; }
    bool cell_active(std::size_t i, std::size_t j, std::size_t k) const { return active_cell_[cell_index(i, j, k)]; }
    std::size_t inactive_cells() const { return lattice_count(Entity::Cell) - count(Entity::Cell); }

    // Lattice indices.
    std::size_t node_index(std::size_t i, std::size_t j, std::size_t k) const
    {
        const std::size_t m = n_ + 1;
        return i + m * (j + m * k);
    }
    std::size_t cell_index(std::size_t i, std::size_t j, std::size_t k) const { return i + n_ * (j + n_ * k); }
    std::size_t edge_index(int axis, std::size_t i, std::size_t j, std::size_t k) const
    {
        const auto d = dims(axis, false);
        return static_cast<std::size_t>(axis) * n_ * (n_ + 1) * (n_ + 1) + i + d[0] * (j + d[1] * k);
    }
    std::size_t face_index(int axis, std::size_t i, std::size_t j, std::size_t k) const
    {
        const auto d = dims(axis, true);
        return static_cast<std::size_t>(axis) * n_ * n_ * (n_ + 1) + i + d[0] * (j + d[1] * k);
    }

    EntityCoord coord(Entity e, std::size_t lattice) const
    {
        EntityCoord c;
        std::array<std::size_t, 3> d{n_ + 1, n_ + 1, n_ + 1};
        std::size_t local = lattice;
        if (e == Entity::Cell)
            d = {n_, n_, n_};
        else if (e == Entity::Edge || e == Entity::Face) {
            const std::size_t block = e == Entity::Edge ? n_ * (n_ + 1) * (n_ + 1) : n_ * n_ * (n_ + 1);
            c.axis = static_cast<int>(lattice / block);
            local = lattice % block;
            d = dims(c.axis, e == Entity::Face);
        }
        c.ijk[0] = local % d[0];
        c.ijk[1] = (local / d[0]) % d[1];
        c.ijk[2] = local / (d[0] * d[1]);
        return c;
    }

    // Lattice indices of the entities of a cell, in the local order used by the
    // mass assembly: nodes by (a, b, c) offsets with a fastest; edges by axis,
    // then by the two transverse offsets; faces by axis, then low/high.
    std::array<std::size_t, 8> cell_nodes(std::size_t i, std::size_t j, std::size_t k) const
    {
        std::array<std::size_t, 8> out{};
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t a = 0; a < 2; ++a)
                    out[a + 2 * b + 4 * c] = node_index(i + a, j + b, k + c);
        return out;
    }
    std::array<std::size_t, 12> cell_edges(std::size_t i, std::size_t j, std::size_t k) const
    {
        std::array<std::size_t, 12> out{};
        for (std::size_t t = 0; t < 4; ++t) {
            const std::size_t p = t & 1, q = t >> 1;
            out[t] = edge_index(0, i, j + p, k + q);
            out[4 + t] = edge_index(1, i + p, j, k + q);
            out[8 + t] = edge_index(2, i + p, j + q, k);
        }
        return out;
    }
    std::array<std::size_t, 6> cell_faces(std::size_t i, std::size_t j, std::size_t k) const
    {
        return {face_index(0, i, j, k), face_index(0, i + 1, j, k), face_index(1, i, j, k),
                face_index(1, i, j + 1, k), face_index(2, i, j, k), face_index(2, i, j, k + 1)};
    }

    /// Active cells on either side of a face (npos where outside or inactive).
    std::array<std::size_t, 2> face_cells(std::size_t face_lattice) const
    {
        const EntityCoord c = coord(Entity::Face, face_lattice);
        std::array<std::size_t, 2> out{npos, npos};
        auto ijk = c.ijk;
        if (ijk[c.axis] < n_ && cell_active(ijk[0], ijk[1], ijk[2]))
            out[1] = cell_index(ijk[0], ijk[1], ijk[2]);
        if (ijk[c.axis] > 0) {
            --ijk[c.axis];
            if (cell_active(ijk[0], ijk[1], ijk[2]))
                out[0] = cell_index(ijk[0], ijk[1], ijk[2]);
        }
        return out;
    }

    /// Edges and nodes bounding a face, as lattice indices.
    std::array<std::size_t, 4> face_edges(std::size_t face_lattice) const
    {
        const EntityCoord c = coord(Entity::Face, face_lattice);
        const int a = c.axis, b = (a + 1) % 3, d = (a + 2) % 3;
        auto shift = [&](int axis) {
            auto v = c.ijk;
            ++v[static_cast<std::size_t>(axis)];
            return v;
        };
        const auto sb = shift(b), sd = shift(d);
        return {edge_index(b, c.ijk[0], c.ijk[1], c.ijk[2]), edge_index(b, sd[0], sd[1], sd[2]),
                edge_index(d, c.ijk[0], c.ijk[1], c.ijk[2]), edge_index(d, sb[0], sb[1], sb[2])};
    }
    std::array<std::size_t, 2> edge_nodes(std::size_t edge_lattice) const
    {
        const EntityCoord c = coord(Entity::Edge, edge_lattice);
        auto up = c.ijk;
        ++up[static_cast<std::size_t>(c.axis)];
        return {node_index(c.ijk[0], c.ijk[1], c.ijk[2]), node_index(up[0], up[1], up[2])};
    }

private:
    /// Lattice extents of the edge (face = false) or face block along `axis`.
    std::array<std::size_t, 3> dims(int axis, bool face) const
    {
        std::array<std::size_t, 3> d{};
        for (int q = 0; q < 3; ++q)
            d[static_cast<std::size_t>(q)] = ((q == axis) == face) ? n_ + 1 : n_;
        return d;
    }

    DomainSpec spec_;
    std::size_t n_;
    double h_ = 0.0;
    std::vector<bool> active_cell_;
    std::array<std::vector<std::size_t>, 4> to_active_;
    std::array<std::vector<std::size_t>, 4> from_active_;
};

inline StructuredMesh build_mesh(const DomainSpec& spec) { return StructuredMesh(spec); }

} // namespace derham::fem
