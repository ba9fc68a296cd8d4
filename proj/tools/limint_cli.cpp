// Command-line front end: runs integration campaigns from a JSON config and
// emits CSV data series, prints tableaux and blended-iteration parameters,
// and drives convergence/stability/symmetry scans.
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "limint/limint.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using limint::Vec;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where)
{
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const auto& key : allowed)
            if (item.key() == key) ok = true;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream out;

    CsvWriter(const fs::path& path, const std::vector<std::string>& header)
        : out(path, std::ios::binary)
    {
        if (!out) throw ConfigError("cannot open output file " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
    }
    void row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i)
            out << (i ? "," : "") << format_double(values[i]);
        out << "\n";
    }
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

struct ProblemSetup {
    limint::ProblemDefinition problem;
    limint::InvariantSet invariants;
    Vec y0;
    std::optional<double> period;
    json effective;
};

ProblemSetup parse_problem(const json& cfg)
{
    if (!cfg.is_object() || !cfg.contains("name")) throw ConfigError("problem: need an object with 'name'");
    const std::string name = cfg.at("name").get<std::string>();
    ProblemSetup setup;
    try {
        if (name == "kepler") {
            reject_unknown_keys(cfg, {"name", "eps"}, "problem");
            const double eps = cfg.value("eps", 0.6);
            auto k = limint::kepler(eps);
            setup.problem = k.system.problem;
            setup.invariants = k.invariants;
            setup.y0 = k.y0;
            setup.period = k.period;
            setup.effective = {{"name", "kepler"}, {"eps", eps}};
        } else if (name == "lotka_volterra") {
            reject_unknown_keys(cfg, {"name", "a", "b", "c", "nu", "mu"}, "problem");
            const double a = cfg.value("a", -2.0), b = cfg.value("b", -1.0), c = cfg.value("c", -0.5);
            const double nu = cfg.value("nu", 1.0), mu = cfg.value("mu", 2.0);
            auto lv = limint::lotka_volterra(a, b, c, nu, mu);
            setup.problem = lv.system.problem;
            setup.invariants = lv.invariants;
            setup.y0 = lv.y0;
            setup.period = lv.period;
            setup.effective = {{"name", "lotka_volterra"}, {"a", a}, {"b", b}, {"c", c}, {"nu", nu}, {"mu", mu}};
        } else if (name == "poly_hamiltonian") {
            reject_unknown_keys(cfg, {"name", "alpha", "beta", "n", "y0"}, "problem");
            const double alpha = cfg.value("alpha", 1.0), beta = cfg.value("beta", 10.0);
            const int n = cfg.value("n", 4);
            auto ph = limint::poly_hamiltonian(alpha, beta, n);
            setup.problem = ph.system.problem;
            setup.invariants = ph.invariants;
            std::vector<double> y0 = cfg.value("y0", std::vector<double>{1.0, -1.0});
            if (y0.size() != 2) throw ConfigError("poly_hamiltonian: y0 must have 2 components");
            setup.y0 = Eigen::Map<Vec>(y0.data(), 2);
            setup.effective = {{"name", "poly_hamiltonian"}, {"alpha", alpha}, {"beta", beta}, {"n", n}, {"y0", y0}};
        } else {
            throw ConfigError("unknown problem '" + name + "'");
        }
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
    return setup;
}

struct MethodSetup {
    limint::Method method;
    json effective;
    bool is_lim = false;
    int k = 0, s = 0;  // for tableau-based scans (gauss/hbvm)
};

MethodSetup parse_method(const json& cfg)
{
    if (!cfg.is_object() || !cfg.contains("name")) throw ConfigError("method: need an object with 'name'");
    const std::string name = cfg.at("name").get<std::string>();
    MethodSetup setup;
    try {
        if (name == "gauss") {
            reject_unknown_keys(cfg, {"name", "s"}, "method");
            const int s = cfg.at("s").get<int>();
            setup.method = limint::make_gauss_method(s);
            setup.k = s;
            setup.s = s;
            setup.effective = {{"name", "gauss"}, {"s", s}};
        } else if (name == "hbvm") {
            reject_unknown_keys(cfg, {"name", "k", "s"}, "method");
            const int k = cfg.at("k").get<int>(), s = cfg.at("s").get<int>();
            setup.method = limint::make_hbvm_method(k, s);
            setup.k = k;
            setup.s = s;
            setup.effective = {{"name", "hbvm"}, {"k", k}, {"s", s}};
        } else if (name == "lim") {
            reject_unknown_keys(cfg, {"name", "r", "k", "s"}, "method");
            const int r = cfg.at("r").get<int>(), k = cfg.at("k").get<int>(), s = cfg.at("s").get<int>();
            setup.method = limint::make_lim_method(r, k, s);
            setup.is_lim = r > 0;
            setup.k = k;
            setup.s = s;
            setup.effective = {{"name", "lim"}, {"r", r}, {"k", k}, {"s", s}};
        } else if (name == "trapezoidal") {
            reject_unknown_keys(cfg, {"name", "nu"}, "method");
            const int nu = cfg.at("nu").get<int>();
            setup.method = limint::make_trapezoidal_method(nu);
            setup.effective = {{"name", "trapezoidal"}, {"nu", nu}};
        } else {
            throw ConfigError("unknown method '" + name + "'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("method: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("method: ") + e.what());
    }
    return setup;
}

limint::SolverSettings parse_solver(const json& cfg, json& effective)
{
    limint::SolverSettings st;
    if (!cfg.is_null()) {
        reject_unknown_keys(cfg, {"kind", "tol", "max_outer", "max_inner", "jacobian", "jacobian_reuse_limit"},
                            "solver");
        const std::string kind = cfg.value("kind", "simplified_newton");
        if (kind == "fixed_point")
            st.kind = limint::SolverKind::fixed_point;
        else if (kind == "simplified_newton")
            st.kind = limint::SolverKind::simplified_newton;
        else if (kind == "blended_nonlinear")
            st.kind = limint::SolverKind::blended_nonlinear;
        else if (kind == "blended_outer_inner")
            st.kind = limint::SolverKind::blended_outer_inner;
        else
            throw ConfigError("solver: unknown kind '" + kind + "'");
        st.tol = cfg.value("tol", st.tol);
        st.max_outer = cfg.value("max_outer", st.max_outer);
        st.max_inner = cfg.value("max_inner", st.max_inner);
        const std::string jac = cfg.value("jacobian", "analytic");
        if (jac == "analytic")
            st.jacobian_policy = limint::JacobianPolicy::analytic;
        else if (jac == "finite_difference")
            st.jacobian_policy = limint::JacobianPolicy::finite_difference;
        else
            throw ConfigError("solver: unknown jacobian policy '" + jac + "'");
        st.jacobian_reuse_limit = cfg.value("jacobian_reuse_limit", st.jacobian_reuse_limit);
    }
    if (st.tol <= 0) throw ConfigError("solver: tol must be positive");
    if (st.max_outer < 1 || st.max_inner < 1) throw ConfigError("solver: iteration caps must be >= 1");
    const char* kind_name = st.kind == limint::SolverKind::fixed_point          ? "fixed_point"
                            : st.kind == limint::SolverKind::simplified_newton  ? "simplified_newton"
                            : st.kind == limint::SolverKind::blended_nonlinear  ? "blended_nonlinear"
                                                                                : "blended_outer_inner";
    effective = {{"kind", kind_name},
                 {"tol", st.tol},
                 {"max_outer", st.max_outer},
                 {"max_inner", st.max_inner},
                 {"jacobian", st.jacobian_policy == limint::JacobianPolicy::analytic ? "analytic"
                                                                                     : "finite_difference"},
                 {"jacobian_reuse_limit", st.jacobian_reuse_limit}};
    return st;
}

void apply_enforce_mask(limint::InvariantSet& invariants, const json& cfg, json& effective)
{
    std::vector<bool> mask(invariants.nu, true);
    if (!cfg.is_null()) {
        if (!cfg.is_array() || static_cast<int>(cfg.size()) != invariants.nu)
            throw ConfigError("enforce: need a boolean array, one entry per invariant");
        for (int i = 0; i < invariants.nu; ++i) mask[i] = cfg[i].get<bool>();
    }
    invariants.enforce_mask = mask;
    effective = json::array();
    for (bool b : mask) effective.push_back(b);
}

json load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Subcommand: run
// ---------------------------------------------------------------------------

int cmd_run(const std::string& config_path, const std::string& out_dir, bool quiet)
{
    const json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"problem", "method", "solver", "mode", "enforce", "outputs"}, "config");
    if (!cfg.contains("problem") || !cfg.contains("method") || !cfg.contains("mode"))
        throw ConfigError("config needs 'problem', 'method' and 'mode'");

    ProblemSetup prob = parse_problem(cfg.at("problem"));
    MethodSetup meth = parse_method(cfg.at("method"));
    json solver_eff;
    const limint::SolverSettings solver =
        parse_solver(cfg.contains("solver") ? cfg.at("solver") : json(), solver_eff);
    json enforce_eff;
    apply_enforce_mask(prob.invariants, cfg.contains("enforce") ? cfg.at("enforce") : json(), enforce_eff);

    std::vector<std::string> outputs = {"invariants"};
    if (cfg.contains("outputs")) {
        outputs.clear();
        for (const auto& o : cfg.at("outputs")) outputs.push_back(o.get<std::string>());
    }
    for (const auto& o : outputs)
        if (o != "invariants" && o != "per_period_error" && o != "trajectory" && o != "step_sizes")
            throw ConfigError("outputs: unknown series '" + o + "'");

    const json& mode = cfg.at("mode");
    if (!mode.contains("type")) throw ConfigError("mode: missing 'type'");
    const std::string mode_type = mode.at("type").get<std::string>();

    limint::IntegrationRun run;
    json mode_eff;
    if (mode_type == "fixed") {
        reject_unknown_keys(mode, {"type", "h", "n_steps", "sample_every"}, "mode");
        const double h = mode.at("h").get<double>();
        const long n_steps = mode.at("n_steps").get<long>();
        const long sample_every = mode.value("sample_every", 1L);
        if (h <= 0) throw ConfigError("mode: h must be positive");
        if (n_steps < 0) throw ConfigError("mode: n_steps must be >= 0");
        mode_eff = {{"type", "fixed"}, {"h", h}, {"n_steps", n_steps}, {"sample_every", sample_every}};
        run = limint::integrate_fixed(meth.method, prob.problem, &prob.invariants, prob.y0, h, n_steps,
                                      sample_every, solver);
    } else if (mode_type == "adaptive") {
        reject_unknown_keys(mode, {"type", "tol", "t_end", "h_init", "h_min", "h_max", "safety", "growth_cap"},
                            "mode");
        limint::AdaptiveSettings as;
        as.tol = mode.at("tol").get<double>();
        const double t_end = mode.at("t_end").get<double>();
        as.h_init = mode.value("h_init", 1e-3);
        as.h_min = mode.value("h_min", 1e-12);
        as.h_max = mode.value("h_max", t_end);
        as.safety = mode.value("safety", 0.85);
        as.growth_cap = mode.value("growth_cap", 5.0);
        if (as.tol <= 0 || t_end <= 0) throw ConfigError("mode: tol and t_end must be positive");
        mode_eff = {{"type", "adaptive"}, {"tol", as.tol},       {"t_end", t_end},
                    {"h_init", as.h_init}, {"h_min", as.h_min},  {"h_max", as.h_max},
                    {"safety", as.safety}, {"growth_cap", as.growth_cap}};
        run = limint::integrate_adaptive(meth.method, prob.problem, &prob.invariants, prob.y0, t_end, as,
                                         solver);
    } else {
        throw ConfigError("mode: unknown type '" + mode_type + "'");
    }

    fs::create_directories(out_dir);
    json effective = {{"problem", prob.effective}, {"method", meth.effective}, {"solver", solver_eff},
                      {"mode", mode_eff},          {"enforce", enforce_eff},   {"outputs", outputs}};
    {
        std::ofstream eff(fs::path(out_dir) / "effective_config.json", std::ios::binary);
        eff << effective.dump(2) << "\n";
    }

    for (const auto& series : outputs) {
        if (series == "invariants") {
            std::vector<std::string> header = {"t"};
            for (const auto& n : prob.invariants.names) header.push_back("d" + n);
            CsvWriter csv(fs::path(out_dir) / "invariants.csv", header);
            for (std::size_t i = 0; i < run.times.size(); ++i) {
                std::vector<double> row = {run.times[i]};
                for (int j = 0; j < run.invariant_errors[i].size(); ++j)
                    row.push_back(run.invariant_errors[i][j]);
                csv.row(row);
            }
        } else if (series == "trajectory") {
            std::vector<std::string> header = {"t"};
            for (int j = 0; j < prob.problem.dim; ++j) header.push_back("y" + std::to_string(j));
            CsvWriter csv(fs::path(out_dir) / "trajectory.csv", header);
            for (std::size_t i = 0; i < run.times.size(); ++i) {
                std::vector<double> row = {run.times[i]};
                for (int j = 0; j < prob.problem.dim; ++j) row.push_back(run.states[i][j]);
                csv.row(row);
            }
        } else if (series == "step_sizes") {
            CsvWriter csv(fs::path(out_dir) / "step_sizes.csv", {"t", "h"});
            double t = 0.0;
            for (double h : run.step_sizes) {
                t += h;
                csv.row({t, h});
            }
        } else if (series == "per_period_error") {
            if (!prob.period) throw ConfigError("per_period_error needs a periodic problem");
            const auto errors = limint::per_period_error(run, prob.y0, *prob.period);
            CsvWriter csv(fs::path(out_dir) / "per_period_error.csv", {"t", "error"});
            for (std::size_t n = 0; n < errors.size(); ++n)
                csv.row({static_cast<double>(n) * *prob.period, errors[n]});
        }
    }

    if (run.failed)
        throw NumericalError(run.failure);
    if (!quiet)
        std::cout << "run complete: " << run.solver_stats.steps << " steps, " << run.rejections
                  << " rejections, output in " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: tableau
// ---------------------------------------------------------------------------

int cmd_tableau(const std::vector<std::string>& spec)
{
    if (spec.empty()) throw ConfigError("tableau: expected a method spec, e.g. 'hbvm 2 2'");
    limint::ButcherTableau t;
    try {
        if (spec[0] == "hbvm") {
            if (spec.size() != 3) throw ConfigError("tableau: hbvm needs k and s");
            t = limint::hbvm_tableau(std::stoi(spec[1]), std::stoi(spec[2]));
        } else if (spec[0] == "gauss") {
            if (spec.size() != 2) throw ConfigError("tableau: gauss needs s");
            t = limint::gauss_tableau(std::stoi(spec[1]));
        } else if (spec[0] == "trapezoidal") {
            if (spec.size() != 2) throw ConfigError("tableau: trapezoidal needs nu");
            t = limint::trapezoidal_tableau(std::stoi(spec[1]));
        } else {
            throw ConfigError("tableau: unknown method '" + spec[0] + "'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("tableau: ") + e.what());
    }

    std::cout << "c:";
    for (int i = 0; i < t.stages; ++i) std::cout << " " << format_double(t.c[i]);
    std::cout << "\nA:\n";
    for (int i = 0; i < t.stages; ++i) {
        for (int j = 0; j < t.stages; ++j) std::cout << (j ? " " : "") << format_double(t.A(i, j));
        std::cout << "\n";
    }
    std::cout << "b:";
    for (int i = 0; i < t.stages; ++i) std::cout << " " << format_double(t.b[i]);
    std::cout << "\norder: " << t.order << "\n";
    std::cout << "rank: " << limint::numerical_rank(t.A) << "\n";
    std::cout << "symplecticity_residual: " << format_double(limint::check_symplectic(t)) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: blended-table
// ---------------------------------------------------------------------------

int cmd_blended_table(int s_max)
{
    if (s_max < 1 || s_max > 16) throw ConfigError("blended-table: s_max must be in [1,16]");
    std::printf("s  zeta    rho_star  rho_tilde\n");
    for (int s = 1; s <= s_max; ++s) {
        const auto p = limint::blended_params(s);
        std::printf("%-2d %.4f  %.4f    %.4f\n", s, p.zeta, p.rho_star, p.rho_tilde);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: convergence
// ---------------------------------------------------------------------------

int cmd_convergence(const std::string& config_path, const std::string& out_dir, bool quiet)
{
    const json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"problem", "method", "solver", "enforce", "t_end", "h0", "halvings"},
                        "config");
    ProblemSetup prob = parse_problem(cfg.at("problem"));
    MethodSetup meth = parse_method(cfg.at("method"));
    json solver_eff;
    const limint::SolverSettings solver =
        parse_solver(cfg.contains("solver") ? cfg.at("solver") : json(), solver_eff);
    json enforce_eff;
    apply_enforce_mask(prob.invariants, cfg.contains("enforce") ? cfg.at("enforce") : json(), enforce_eff);

    const double t_end = cfg.value("t_end", 1.0);
    const double h0 = cfg.value("h0", 0.1);
    const int halvings = cfg.value("halvings", 5);
    if (t_end <= 0 || h0 <= 0 || halvings < 1) throw ConfigError("convergence: bad t_end/h0/halvings");

    std::vector<double> h_list;
    for (int i = 0; i <= halvings; ++i) h_list.push_back(h0 / std::pow(2.0, i));

    const Vec reference = limint::reference_solution(prob.problem, prob.y0, t_end, h_list.back());
    limint::ConvergenceStudy study;
    try {
        study = limint::convergence_study(meth.method, prob.problem, &prob.invariants, prob.y0, t_end,
                                          h_list, reference, solver);
    } catch (const std::runtime_error& e) {
        throw NumericalError(e.what());
    }

    fs::create_directories(out_dir);
    {
        json effective = {{"problem", prob.effective}, {"method", meth.effective},
                          {"solver", solver_eff},      {"enforce", enforce_eff},
                          {"t_end", t_end},            {"h0", h0},
                          {"halvings", halvings}};
        std::ofstream eff(fs::path(out_dir) / "effective_config.json", std::ios::binary);
        eff << effective.dump(2) << "\n";
    }
    CsvWriter csv(fs::path(out_dir) / "convergence.csv", {"h", "error", "slope"});
    for (std::size_t i = 0; i < study.h_used.size(); ++i)
        csv.row({study.h_used[i], study.errors[i], study.slope});
    if (!quiet) std::cout << "observed order: " << format_double(study.slope) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: stability
// ---------------------------------------------------------------------------

int cmd_stability(const std::string& config_path, const std::string& out_dir, bool quiet)
{
    const json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"method", "grid"}, "config");
    MethodSetup meth = parse_method(cfg.at("method"));
    if (meth.effective.at("name") == "lim") throw ConfigError("stability: use gauss/hbvm/trapezoidal");

    limint::ButcherTableau t;
    if (meth.effective.at("name") == "trapezoidal")
        t = limint::trapezoidal_tableau(meth.effective.at("nu").get<int>());
    else
        t = limint::hbvm_tableau(meth.k, meth.s);

    json grid = cfg.contains("grid") ? cfg.at("grid") : json::object();
    reject_unknown_keys(grid, {"re_min", "re_max", "re_points", "im_min", "im_max", "im_points"}, "grid");
    const double re_min = grid.value("re_min", -10.0), re_max = grid.value("re_max", 0.0);
    const double im_min = grid.value("im_min", 0.0), im_max = grid.value("im_max", 10.0);
    const int re_points = grid.value("re_points", 20), im_points = grid.value("im_points", 20);
    if (re_points < 1 || im_points < 1) throw ConfigError("grid: need at least one point per axis");

    std::vector<std::complex<double>> qs;
    for (int i = 0; i < re_points; ++i) {
        const double re = re_points == 1 ? re_min : re_min + (re_max - re_min) * i / (re_points - 1.0);
        for (int j = 0; j < im_points; ++j) {
            const double im = im_points == 1 ? im_min : im_min + (im_max - im_min) * j / (im_points - 1.0);
            qs.emplace_back(re, im);
        }
    }
    const auto scan = limint::stability_scan(t, qs);

    fs::create_directories(out_dir);
    CsvWriter csv(fs::path(out_dir) / "stability.csv", {"re_q", "im_q", "abs_R"});
    for (const auto& pt : scan)
        csv.row({pt.q.real(), pt.q.imag(), pt.ok ? pt.abs_R : std::nan("")});
    if (!quiet) std::cout << "stability grid written (" << scan.size() << " points)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: symmetry
// ---------------------------------------------------------------------------

int cmd_symmetry(const std::string& config_path)
{
    const json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"problem", "method", "enforce", "h"}, "config");
    ProblemSetup prob = parse_problem(cfg.at("problem"));
    MethodSetup meth = parse_method(cfg.at("method"));
    json enforce_eff;
    apply_enforce_mask(prob.invariants, cfg.contains("enforce") ? cfg.at("enforce") : json(), enforce_eff);
    const double h = cfg.value("h", 1e-2);
    if (h <= 0) throw ConfigError("symmetry: h must be positive");
    try {
        const double defect =
            limint::symmetry_defect(meth.method, prob.problem, &prob.invariants, prob.y0, h);
        std::cout << format_double(defect) << "\n";
    } catch (const std::runtime_error& e) {
        throw NumericalError(e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"line-integral family of structure-preserving ODE integrators"};
    app.require_subcommand(1);
    app.fallthrough();  // let --quiet appear after the subcommand as well

    std::string config_path, out_dir = ".";
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress progress output");

    auto* run = app.add_subcommand("run", "integrate a configured campaign and emit CSV series");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--out", out_dir, "output directory");

    auto* tableau = app.add_subcommand("tableau", "print a Butcher tableau");
    std::vector<std::string> tableau_spec;
    tableau->add_option("spec", tableau_spec, "method spec, e.g. hbvm 2 2 | trapezoidal 3")->expected(-1);

    auto* blended = app.add_subcommand("blended-table", "print blended-iteration parameters");
    int s_max = 7;
    blended->add_option("--s-max", s_max, "largest degree to print");

    auto* convergence = app.add_subcommand("convergence", "global-error order study");
    convergence->add_option("--config", config_path, "JSON config file")->required();
    convergence->add_option("--out", out_dir, "output directory");

    auto* stability = app.add_subcommand("stability", "scan |R(q)| over a complex grid");
    stability->add_option("--config", config_path, "JSON config file")->required();
    stability->add_option("--out", out_dir, "output directory");

    auto* symmetry = app.add_subcommand("symmetry", "forward-then-reversed step defect");
    symmetry->add_option("--config", config_path, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, quiet);
        if (tableau->parsed()) return cmd_tableau(tableau_spec);
        if (blended->parsed()) return cmd_blended_table(s_max);
        if (convergence->parsed()) return cmd_convergence(config_path, out_dir, quiet);
        if (stability->parsed()) return cmd_stability(config_path, out_dir, quiet);
        if (symmetry->parsed()) return cmd_symmetry(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const limint::degeneracy_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const limint::divergence_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const limint::singular_iteration_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
