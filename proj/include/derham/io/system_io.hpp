#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "derham/constrained/system.hpp"
#include "derham/fem/assemble.hpp"
#include "derham/io/matrix_market.hpp"

namespace derham::io {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Line-oriented `key = value`; `#` starts a comment. Later keys win.
inline KeyValues parse_key_values(std::istream& is, const std::string& source = "<stream>")
{
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(source, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ParseError(source, lineno, "empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open '" + path + "'");
    return parse_key_values(in, path);
}

inline void write_key_values(std::ostream& os, const KeyValues& kv)
{
    for (const auto& [k, v] : kv)
        os << k << " = " << v << '\n';
}

inline constexpr const char* manifest_name = "manifest.txt";

inline std::string format_real(double v)
{
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

/// Writes A, B, M, U (Matrix Market), F, G (vector text) and manifest.txt
/// into dir. `meta` entries are copied into the manifest.
inline void export_system(const std::string& dir, const ConstrainedSystem& sys, const KeyValues& meta = {})
{
    sys.validate();
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    save_matrix_market((d / "A.mtx").string(), *sys.A);
    save_matrix_market((d / "B.mtx").string(), *sys.B);
    save_matrix_market((d / "M.mtx").string(), *sys.M);
    save_matrix_market((d / "U.mtx").string(), *sys.U);
    save_vector((d / "F.vec").string(), sys.F);
    save_vector((d / "G.vec").string(), sys.G);
    KeyValues kv = meta;
    kv["A"] = "A.mtx";
    kv["B"] = "B.mtx";
    kv["M"] = "M.mtx";
    kv["U"] = "U.mtx";
    kv["F"] = "F.vec";
    kv["G"] = "G.vec";
    kv["c"] = format_real(sys.c);
    kv["n"] = std::to_string(sys.n());
    kv["m"] = std::to_string(sys.m());
    std::ofstream out(d / manifest_name);
    if (!out)
        throw InvalidArgument("cannot write '" + (d / manifest_name).string() + "'");
    out << "# constrained system: (A + cM) u + B p = F, B^T u = G\n";
    write_key_values(out, kv);
}

struct ImportedSystem {
    ConstrainedSystem system;
    KeyValues manifest;
};

/// Reads a system written by export_system. `path` is the directory or the
/// manifest file; file names in the manifest are relative to it.
inline ImportedSystem import_system(const std::string& path)
{
    namespace fs = std::filesystem;
    fs::path manifest(path);
    if (fs::is_directory(manifest))
        manifest /= manifest_name;
    const fs::path base = manifest.parent_path();
    ImportedSystem out;
    out.manifest = load_key_values(manifest.string());
    auto field = [&](const char* key) -> const std::string& {
        const auto it = out.manifest.find(key);
        if (it == out.manifest.end() || it->second.empty())
            throw InvalidArgument("manifest '" + manifest.string() + "': missing field '" + key + "'");
        return it->second;
    };
    auto file = [&](const char* key) { return (base / field(key)).string(); };

    ConstrainedSystem& s = out.system;
    s.A = std::make_shared<const CsrMatrix>(load_matrix_market(file("A")));
    s.B = std::make_shared<const CsrMatrix>(load_matrix_market(file("B")));
    s.M = std::make_shared<const CsrMatrix>(load_matrix_market(file("M")));
    s.U = std::make_shared<const CsrMatrix>(load_matrix_market(file("U")));
    s.F = load_vector(file("F"));
    s.G = load_vector(file("G"));
    const std::string& c = field("c");
    try {
        std::size_t used = 0;
        s.c = std::stod(c, &used);
        if (used != c.size())
            throw std::invalid_argument(c);
    } catch (const std::exception&) {
        throw InvalidArgument("manifest '" + manifest.string() + "': field 'c' is not a number: '" + c + "'");
    }
    s.validate();
    return out;
}

/// export_system plus dofs.csv (system index to mesh entity) and mesh.txt.
inline void export_problem(const std::string& dir, const fem::AssembledProblem& p, KeyValues meta = {})
{
    namespace fs = std::filesystem;
    const fem::StructuredMesh& mesh = p.mesh;
    meta["problem"] = fem::to_string(p.problem);
    meta["bc"] = fem::to_string(p.bc);
    meta["domain"] = fem::to_string(mesh.shape());
    meta["cells_per_axis"] = std::to_string(mesh.n());
    meta["predicted_dim_c0"] = std::to_string(p.predicted_dim_c0);
    export_system(dir, p.system, meta);

    const fs::path d(dir);
    std::ofstream dofs(d / "dofs.csv");
    dofs << "space,index,entity,axis,i,j,k\n";
    auto emit = [&](const char* space, fem::Entity e, const std::vector<std::size_t>& ids) {
        static const char* names[] = {"node", "edge", "face", "cell"};
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const fem::EntityCoord c = mesh.coord(e, mesh.lattice_id(e, ids[i]));
            dofs << space << ',' << i << ',' << names[static_cast<int>(e)] << ',' << c.axis << ',' << c.ijk[0] << ','
                 << c.ijk[1] << ',' << c.ijk[2] << '\n';
        }
    };
    emit("u", p.u_entity, p.u_dofs);
    emit("p", p.p_entity, p.p_dofs);

    std::ofstream m(d / "mesh.txt");
    m << "shape = " << fem::to_string(mesh.shape()) << '\n'
      << "n = " << mesh.n() << '\n'
      << "side = " << format_real(mesh.side()) << '\n'
      << "h = " << format_real(mesh.h()) << '\n'
      << "nodes = " << mesh.count(fem::Entity::Node) << '\n'
      << "edges = " << mesh.count(fem::Entity::Edge) << '\n'
      << "faces = " << mesh.count(fem::Entity::Face) << '\n'
      << "cells = " << mesh.count(fem::Entity::Cell) << '\n'
      << "inactive_cells = " << mesh.inactive_cells() << '\n';
}

} // namespace derham::io
