#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "derham/derham.hpp"

namespace {

using namespace derham;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;
constexpr int exit_gated = 3;

/// Defect above which an imported system is not solved without --force.
constexpr double complex_property_gate = 1e-9;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

std::string default_output_dir()
{
    const char* env = std::getenv("DERHAM_OUTPUT_DIR");
    return env && *env ? env : "derham-out";
}

std::vector<double> parse_reals(const std::string& list, const char* what)
{
    std::vector<double> out;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = io::trim(tok);
        if (tok.empty())
            continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size())
            throw UsageError(std::string(what) + ": not a number: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

/// Ordered key = value report, written to summary.txt and echoed to stdout.
struct Report {
    std::vector<std::pair<std::string, std::string>> lines;
    void add(const std::string& k, const std::string& v) { lines.emplace_back(k, v); }
    void add(const std::string& k, double v) { add(k, sci(v)); }
    void add(const std::string& k, std::size_t v) { add(k, std::to_string(v)); }

    void write(std::ostream& os) const
    {
        for (const auto& [k, v] : lines)
            os << k << " = " << v << '\n';
    }
    void save(const std::filesystem::path& p) const
    {
        std::ofstream out(p);
        if (!out)
            throw Error("cannot write " + p.string());
        write(out);
    }
};

// ---------------------------------------------------------------- options

struct ProblemFlags {
    int example = 0;
    std::size_t n = 8;
    std::optional<std::string> domain, problem, bc;
    std::optional<double> c;
    std::optional<double> u_scale;
    std::string g_mode = "consistent";
    double g_rel = 1e-2;
    std::uint64_t seed = 7;
};

struct SolverFlags {
    std::string kind = "auto";
    std::string alphas;
    std::string precond = "ilu0";
    double tol = 1e-10;
    double inner_tol = 1e-11;
    std::size_t max_iter = 5000;
};

void add_problem_flags(CLI::App* app, ProblemFlags& f, std::size_t default_n = 8)
{
    f.n = default_n;
    app->add_option("--example", f.example, "Preset 1-5; other flags override its fields")
        ->check(CLI::Range(1, 5));
    app->add_option("--n", f.n, "Cells per axis")->check(CLI::PositiveNumber);
    app->add_option("--domain", f.domain, "cube, tunnel or void");
    app->add_option("--problem", f.problem, "maxwell or graddiv");
    app->add_option("--bc", f.bc, "dirichlet or neumann");
    app->add_option("--c", f.c, "Mass coefficient c >= 0");
    app->add_option("--u-scale", f.u_scale, "U = alpha I with this alpha (default 5/h^3)");
    app->add_option("--g-mode", f.g_mode, "zero, consistent or inconsistent");
    app->add_option("--g-rel", f.g_rel, "Relative size of the injected inconsistency");
    app->add_option("--seed", f.seed, "Seed of the right-hand sides");
}

void add_solver_flags(CLI::App* app, SolverFlags& f)
{
    app->add_option("--kind", f.kind, "auto or an equivalent-problem kind");
    app->add_option("--alphas", f.alphas, "alpha1,alpha2 for dim0-czero-twoalpha");
    app->add_option("--precond", f.precond, "none, jacobi or ilu0");
    app->add_option("--tol", f.tol, "Final-stage tolerance on the mixed residual")->check(CLI::PositiveNumber);
    app->add_option("--inner-tol", f.inner_tol, "Tolerance of the inner stages")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", f.max_iter, "PCG iteration cap per stage")->check(CLI::PositiveNumber);
}

struct Problem {
    fem::AssembledProblem assembled;
    fem::GMode g_mode;
    int example;
};

Problem build_problem(const ProblemFlags& f)
{
    fem::ExamplePreset p;
    if (f.example != 0)
        p = fem::example_preset(f.example);
    else
        p = {0, fem::DomainShape::Cube, fem::ProblemType::Maxwell, fem::BoundaryCondition::Neumann, 0.0};
    if (f.domain)
        p.shape = fem::parse_domain(*f.domain);
    if (f.problem)
        p.problem = fem::parse_problem(*f.problem);
    if (f.bc)
        p.bc = fem::parse_bc(*f.bc);
    if (f.c)
        p.c = *f.c;
    const fem::GMode mode = fem::parse_g_mode(f.g_mode);
    Problem out{fem::assemble_system(fem::build_mesh({p.shape, f.n}), p.problem, p.bc, p.c, f.u_scale), mode,
                f.example};
    fem::apply_rhs(out.assembled.system, fem::make_rhs(out.assembled, f.seed, {mode, f.g_rel}));
    return out;
}

void describe(Report& r, const Problem& p, const ProblemFlags& f)
{
    const auto& a = p.assembled;
    r.add("example", p.example ? std::to_string(p.example) : std::string("custom"));
    r.add("domain", fem::to_string(a.mesh.shape()));
    r.add("n", a.mesh.n());
    r.add("problem", fem::to_string(a.problem));
    r.add("bc", fem::to_string(a.bc));
    r.add("c", io::format_real(a.system.c));
    r.add("g_mode", fem::to_string(p.g_mode));
    r.add("seed", std::to_string(f.seed));
    r.add("unknowns_u", a.system.n());
    r.add("unknowns_p", a.system.m());
    r.add("predicted_dim_c0", a.predicted_dim_c0);
}

// ---------------------------------------------------------------- solving

struct SolveRequest {
    const ConstrainedSystem* sys = nullptr;
    std::optional<std::size_t> predicted;
    bool inconsistent = false;
    bool check_oracle = false;
};

int solve_and_report(const SolveRequest& req, const SolverFlags& sf, const std::string& out, Report& rep)
{
    const ConstrainedSystem& sys = *req.sys;
    SolveOptions opt;
    opt.precond = parse_preconditioner_kind(sf.precond);
    opt.final_stage.rel_tol = sf.tol;
    opt.final_stage.max_iter = sf.max_iter;
    opt.inner.rel_tol = sf.inner_tol;
    opt.inner.max_iter = sf.max_iter;
    opt.inconsistent_monitor = req.inconsistent;
    if (!sf.alphas.empty()) {
        const auto a = parse_reals(sf.alphas, "--alphas");
        if (a.size() != 2)
            throw UsageError("--alphas takes exactly two values");
        opt.alphas = std::make_pair(a[0], a[1]);
    }

    SystemPreconditioners precs(sys, opt.precond);
    const HarmonicBasis H = measure_harmonic(sys, req.predicted, opt.harmonic, precs);
    rep.add("dim_c0", H.dim());
    rep.add("eigensolver_block", H.block_size);
    rep.add("eigensolver_iterations", H.lobpcg_iterations);
    const ProblemKind kind = sf.kind == "auto" ? auto_select_kind(H.dim(), sys.c) : parse_problem_kind(sf.kind);

    namespace fs = std::filesystem;
    const fs::path dir(out);
    fs::create_directories(dir);
    auto trace_file = [&](const std::string& stage, const IterationTrace& t) {
        std::ofstream os(dir / ("trace_" + stage + ".csv"));
        if (!os)
            throw Error("cannot write traces into " + dir.string());
        write_trace_csv(os, stage, t);
    };
    trace_file("harmonic", H.trace);

    Solution sol;
    try {
        sol = solve_equivalent(sys, kind, H, precs, opt);
    } catch (const DivergenceError& e) {
        rep.add("kind", to_string(kind));
        rep.add("status", "diverged");
        rep.add("error", e.what());
        rep.save(dir / "summary.txt");
        rep.write(std::cout);
        std::cerr << "error: " << e.what() << '\n';
        return exit_failed;
    }
    for (const auto& s : sol.stages)
        trace_file(s.name, s.trace);
    io::save_vector((dir / "u.vec").string(), sol.u);
    io::save_vector((dir / "bp.vec").string(), sol.Bp);

    rep.add("kind", to_string(sol.kind));
    rep.add("precond", to_string(opt.precond));
    if (sol.alphas) {
        rep.add("alpha1", sol.alphas->first);
        rep.add("alpha2", sol.alphas->second);
    }
    for (const auto& s : sol.stages)
        rep.add("iterations." + s.name, s.iterations);
    rep.add("residual_measure", req.inconsistent ? "inconsistent" : "mixed");
    rep.add("final_residual", sol.final_residual);
    rep.add("tolerance", sf.tol);
    rep.add("constraint_defect", sol.constraint_defect);
    if (req.predicted && *req.predicted != H.dim())
        rep.add("warning", "measured dim C0 differs from the prediction " + std::to_string(*req.predicted));
    for (const auto& w : sol.warnings)
        rep.add("warning", w);

    if (req.check_oracle) {
        try {
            const oracle::KktSolution k = oracle::dense_kkt_solve(sys);
            const double d = blas::norm2(blas::sub(sol.u, k.u)) / std::max(blas::norm2(k.u), 1e-300);
            rep.add("oracle_deviation", d);
            rep.add("oracle_kkt_rank", k.rank);
        } catch (const SizeCapError& e) {
            rep.add("oracle_deviation", std::string("skipped: ") + e.what());
        }
    }
    const bool ok = sol.final_residual <= sf.tol;
    rep.add("status", ok ? "converged" : "above tolerance");
    rep.save(dir / "summary.txt");
    rep.write(std::cout);
    return ok ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------- commands

int cmd_run(const ProblemFlags& pf, const SolverFlags& sf, bool check_oracle, const std::string& out)
{
    const Problem p = build_problem(pf);
    Report rep;
    describe(rep, p, pf);
    return solve_and_report({&p.assembled.system, p.assembled.predicted_dim_c0, p.g_mode == fem::GMode::Inconsistent,
                             check_oracle},
                            sf, out, rep);
}

int cmd_penalty_sweep(const ProblemFlags& pf, const std::string& eps_list, const std::string& precond, double tol,
                      std::size_t max_iter, const std::string& out)
{
    const std::vector<double> eps = parse_reals(eps_list, "--eps");
    if (eps.empty())
        throw UsageError("--eps needs at least one value");
    for (double e : eps)
        if (!(e > 0.0))
            throw UsageError("--eps values must be positive");
    const Problem p = build_problem(pf);
    const ConstrainedSystem& sys = p.assembled.system;
    Report rep;
    describe(rep, p, pf);

    // Reference: the dense KKT solution when it is unique and small enough,
    // otherwise the equivalent-problem solution.
    Vector ref;
    std::string ref_name;
    try {
        const oracle::KktSolution k = oracle::dense_kkt_solve(sys);
        if (k.rank == sys.n() + sys.m()) {
            ref = k.u;
            ref_name = "dense-kkt";
        }
    } catch (const SizeCapError&) {
    }
    if (ref.empty()) {
        SolveOptions opt;
        opt.predicted_dim_c0 = p.assembled.predicted_dim_c0;
        ref = solve(sys, opt).u;
        ref_name = "equivalent-problem";
    }
    rep.add("reference", ref_name);
    rep.add("precond", precond);

    namespace fs = std::filesystem;
    const fs::path dir(out);
    fs::create_directories(dir);
    std::ofstream csv(dir / "penalty.csv");
    csv << "epsilon,relative_error,iterations,converged\n";
    std::vector<double> errors;
    const PcgConfig cfg{tol, max_iter, true};
    const PreconditionerKind pk = parse_preconditioner_kind(precond);
    for (double e : eps) {
        std::vector<std::string> warnings;
        const PcgResult r = penalty_solve(sys, e, pk, cfg, &warnings);
        const double err = blas::norm2(blas::sub(r.x, ref)) / std::max(blas::norm2(ref), 1e-300);
        errors.push_back(err);
        csv << sci(e) << ',' << sci(err) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
        rep.add("error." + sci(e), sci(err) + (r.converged ? "" : " (not converged)"));
    }
    const auto best = static_cast<std::size_t>(std::min_element(errors.begin(), errors.end()) - errors.begin());
    rep.add("best_epsilon", eps[best]);
    std::string shape = "v-shape";
    if (errors.size() < 3)
        shape = "too few points";
    else if (best == 0)
        shape = "increasing";
    else if (best + 1 == errors.size())
        shape = "decreasing";
    rep.add("shape", shape);
    rep.save(dir / "summary.txt");
    rep.write(std::cout);
    return exit_ok;
}

int cmd_export(const ProblemFlags& pf, const std::string& out)
{
    const Problem p = build_problem(pf);
    io::KeyValues meta;
    meta["example"] = p.example ? std::to_string(p.example) : "custom";
    meta["seed"] = std::to_string(pf.seed);
    meta["g_mode"] = fem::to_string(p.g_mode);
    io::export_problem(out, p.assembled, meta);
    std::cout << "exported " << p.assembled.system.n() << " x " << p.assembled.system.m() << " system to " << out
              << '\n';
    return exit_ok;
}

std::optional<std::size_t> manifest_dim(const io::KeyValues& kv)
{
    const auto it = kv.find("predicted_dim_c0");
    if (it == kv.end())
        return std::nullopt;
    return static_cast<std::size_t>(std::stoul(it->second));
}

int cmd_import(const std::string& path, const SolverFlags& sf, bool force, bool inconsistent, bool check_oracle,
               const std::string& out)
{
    const io::ImportedSystem imp = io::import_system(path);
    const ConstrainedSystem& sys = imp.system;
    Report rep;
    rep.add("source", path);
    rep.add("c", io::format_real(sys.c));
    rep.add("unknowns_u", sys.n());
    rep.add("unknowns_p", sys.m());
    const double defect = verify_complex_property(sys);
    rep.add("complex_property_defect", defect);
    if (defect > complex_property_gate) {
        std::cerr << "warning: A M^-1 B defect " << sci(defect) << " exceeds " << sci(complex_property_gate) << '\n';
        if (!force) {
            std::cerr << "refusing to solve; pass --force to proceed\n";
            return exit_gated;
        }
        rep.add("warning", "solved despite complex property defect (--force)");
    }
    return solve_and_report({&sys, manifest_dim(imp.manifest), inconsistent, check_oracle}, sf, out, rep);
}

int cmd_check(const ProblemFlags& pf, const std::string& import_path, const std::string& precond)
{
    std::optional<Problem> p;
    std::optional<io::ImportedSystem> imp;
    const ConstrainedSystem* sys = nullptr;
    std::optional<std::size_t> predicted;
    if (!import_path.empty()) {
        imp = io::import_system(import_path);
        sys = &imp->system;
        predicted = manifest_dim(imp->manifest);
    } else {
        p = build_problem(pf);
        sys = &p->assembled.system;
        predicted = p->assembled.predicted_dim_c0;
    }

    bool all = true;
    auto line = [&](const std::string& name, bool pass, const std::string& value) {
        all = all && pass;
        std::cout << name << ": " << (pass ? "PASS" : "FAIL") << " (" << value << ")\n";
    };
    auto asym = [](const CsrMatrix& A) { return max_asymmetry(A) / std::max(max_abs(A), 1e-300); };
    line("sizes", true, std::to_string(sys->n()) + " x " + std::to_string(sys->m()));
    line("A symmetric", asym(*sys->A) <= 1e-12, sci(asym(*sys->A)));
    line("M symmetric", asym(*sys->M) <= 1e-12, sci(asym(*sys->M)));
    line("U symmetric", asym(*sys->U) <= 1e-12, sci(asym(*sys->U)));
    const double defect = verify_complex_property(*sys);
    line("complex property A M^-1 B = 0", defect <= complex_property_gate, sci(defect));
    SystemPreconditioners precs(*sys, parse_preconditioner_kind(precond));
    const HarmonicBasis H = measure_harmonic(*sys, predicted, {}, precs);
    if (predicted)
        line("dim C0 matches prediction", H.dim() == *predicted,
             std::to_string(H.dim()) + " vs " + std::to_string(*predicted));
    else
        line("dim C0 measured", true, std::to_string(H.dim()));
    return all ? exit_ok : exit_failed;
}

/// `--config FILE` entries become `--key=value` tokens placed before the
/// command-line flags, so that flags given explicitly win.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw UsageError("--config needs a file");
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty() || args.empty())
        return args;
    const io::KeyValues kv = io::load_key_values(path);
    std::vector<std::string> injected;
    for (const auto& [k, v] : kv)
        injected.push_back("--" + k + "=" + v);
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constrained saddle-point solver for discrete de Rham complexes"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    const std::string default_out = default_output_dir();
    std::string config_unused;

    ProblemFlags run_pf;
    SolverFlags run_sf;
    bool run_oracle = false;
    std::string run_out = default_out;
    CLI::App* run = app.add_subcommand("run", "Assemble a problem, solve it and write traces");
    add_problem_flags(run, run_pf);
    add_solver_flags(run, run_sf);
    run->add_flag("--check-oracle", run_oracle, "Compare u with the dense KKT solution");
    run->add_option("--out", run_out, "Output directory (default $DERHAM_OUTPUT_DIR)");
    run->add_option("--config", config_unused, "key = value file; flags win");

    ProblemFlags pen_pf;
    std::string pen_eps, pen_precond = "jacobi", pen_out = default_out;
    double pen_tol = 1e-10;
    std::size_t pen_max_iter = 20000;
    CLI::App* pen = app.add_subcommand("penalty-sweep", "Penalty-method error against a reference over epsilon");
    add_problem_flags(pen, pen_pf, 4);
    pen_pf.example = 1;
    pen->add_option("--eps", pen_eps, "Comma-separated epsilon values")->required();
    pen->add_option("--precond", pen_precond, "none, jacobi or ilu0");
    pen->add_option("--tol", pen_tol, "PCG tolerance")->check(CLI::PositiveNumber);
    pen->add_option("--max-iter", pen_max_iter, "PCG iteration cap")->check(CLI::PositiveNumber);
    pen->add_option("--out", pen_out, "Output directory (default $DERHAM_OUTPUT_DIR)");
    pen->add_option("--config", config_unused, "key = value file; flags win");

    ProblemFlags exp_pf;
    std::string exp_out = default_out;
    CLI::App* exp = app.add_subcommand("export", "Write an assembled system as Matrix Market files");
    add_problem_flags(exp, exp_pf);
    exp->add_option("--out", exp_out, "Output directory (default $DERHAM_OUTPUT_DIR)");
    exp->add_option("--config", config_unused, "key = value file; flags win");

    std::string imp_path, imp_out = default_out;
    SolverFlags imp_sf;
    bool imp_force = false, imp_inconsistent = false, imp_oracle = false;
    CLI::App* imp = app.add_subcommand("import", "Solve a system written by export");
    imp->add_option("path", imp_path, "Directory or manifest file")->required();
    add_solver_flags(imp, imp_sf);
    imp->add_flag("--force", imp_force, "Solve even if the complex property check fails");
    imp->add_flag("--inconsistent", imp_inconsistent, "Stop on the inconsistent residual (U = alpha I)");
    imp->add_flag("--check-oracle", imp_oracle, "Compare u with the dense KKT solution");
    imp->add_option("--out", imp_out, "Output directory (default $DERHAM_OUTPUT_DIR)");
    imp->add_option("--config", config_unused, "key = value file; flags win");

    ProblemFlags chk_pf;
    std::string chk_import, chk_precond = "ilu0";
    CLI::App* chk = app.add_subcommand("check", "Complex property and invariant checks");
    add_problem_flags(chk, chk_pf);
    chk->add_option("--import", chk_import, "Check an exported system instead");
    chk->add_option("--precond", chk_precond, "Preconditioner of the eigensolver");
    chk->add_option("--config", config_unused, "key = value file; flags win");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (*run) {
            if (run_pf.example == 0 && !run_pf.domain && !run_pf.problem && !run_pf.bc)
                throw UsageError("run needs --example or a custom --domain/--problem/--bc");
            return cmd_run(run_pf, run_sf, run_oracle, run_out);
        }
        if (*pen)
            return cmd_penalty_sweep(pen_pf, pen_eps, pen_precond, pen_tol, pen_max_iter, pen_out);
        if (*exp)
            return cmd_export(exp_pf, exp_out);
        if (*imp)
            return cmd_import(imp_path, imp_sf, imp_force, imp_inconsistent, imp_oracle, imp_out);
        if (*chk)
            return cmd_check(chk_pf, chk_import, chk_precond);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failed;
    }
    return exit_usage;
}
