#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "limint/fit.hpp"
#include "limint/problems.hpp"
#include "limint/step.hpp"
#include "limint/tableau.hpp"

namespace limint {

/// A configured one-step scheme. The invariant set is consulted only by LIM
/// methods (for the enforcement correction); other methods ignore it.
struct Method {
    std::string name;
    int order = 0;
    std::function<StepResult(const ProblemDefinition&, const InvariantSet*, const Vec&, double,
                             const SolverSettings&, SolverWorkspace*)>
        do_step;
};

inline Method make_hbvm_method(int k, int s)
{
    const HBVMConfig cfg = make_hbvm_config(k, s);
    Method m;
    m.name = "hbvm(" + std::to_string(k) + "," + std::to_string(s) + ")";
    m.order = 2 * s;
    m.do_step = [cfg](const ProblemDefinition& p, const InvariantSet*, const Vec& y0, double h,
                      const SolverSettings& st, SolverWorkspace* ws) {
        return hbvm_step(cfg, p, y0, h, st, ws);
    };
    return m;
}

inline Method make_gauss_method(int s)
{
    Method m = make_hbvm_method(s, s);
    m.name = "gauss(" + std::to_string(s) + ")";
    return m;
}

inline Method make_lim_method(int r, int k, int s)
{
    const LIMConfig cfg = make_lim_config(r, k, s);
    Method m;
    m.name = "lim(" + std::to_string(r) + "," + std::to_string(k) + "," + std::to_string(s) + ")";
    m.order = 2 * s;
    m.do_step = [cfg](const ProblemDefinition& p, const InvariantSet* inv, const Vec& y0, double h,
                      const SolverSettings& st, SolverWorkspace* ws) {
        if (cfg.r > 0 && inv == nullptr)
            throw std::invalid_argument("lim method needs an invariant set");
        static const InvariantSet empty{};
        return lim_step(cfg, p, inv ? *inv : empty, y0, h, st, ws);
    };
    return m;
}

inline Method make_trapezoidal_method(int nu)
{
    const ButcherTableau t = trapezoidal_tableau(nu);
    Method m;
    m.name = "trapezoidal(" + std::to_string(nu) + ")";
    m.order = 2;
    m.do_step = [t](const ProblemDefinition& p, const InvariantSet*, const Vec& y0, double h,
                    const SolverSettings& st, SolverWorkspace*) { return rk_step(t, p, y0, h, st); };
    return m;
}

struct SolverStats {
    long total_iterations = 0;
    int max_iterations = 0;
    long steps = 0;
};

struct IntegrationRun {
    std::vector<double> times;                // sample instants, strictly increasing
    std::vector<Vec> states;                  // sampled trajectory
    std::vector<Vec> invariant_errors;        // L(y_n) - L(y_0) at each sample
    std::vector<double> step_sizes;           // accepted h sequence
    long rejections = 0;
    SolverStats solver_stats;
    bool failed = false;
    std::string failure;
};

struct AdaptiveSettings {
    double tol = 1e-8;
    double safety = 0.85;
    double h_init = 1e-2;
    double h_min = 1e-12;
    double h_max = 1.0;
    double growth_cap = 5.0;
};

namespace detail {

inline void record_sample(IntegrationRun& run, double t, const Vec& y, const InvariantSet* monitors,
                          const Vec& L0)
{
    run.times.push_back(t);
    run.states.push_back(y);
    if (monitors)
        run.invariant_errors.push_back(monitors->L(y) - L0);
    else
        run.invariant_errors.push_back(Vec());
}

inline void tally(SolverStats& stats, const StepResult& step)
{
    stats.total_iterations += step.iterations;
    stats.max_iterations = std::max(stats.max_iterations, step.iterations);
    ++stats.steps;
}

}  // namespace detail

/// Constant-stepsize integration with invariant monitoring. A non-converged
/// step or a domain error aborts with the partial run flagged as failed.
inline IntegrationRun integrate_fixed(const Method& method, const ProblemDefinition& problem,
                                      const InvariantSet* monitors, const Vec& y0, double h,
                                      long n_steps, long sample_every,
                                      const SolverSettings& settings)
{
    if (h <= 0.0) throw std::invalid_argument("integrate_fixed: h must be positive");
    if (n_steps < 0) throw std::invalid_argument("integrate_fixed: negative step count");
    if (sample_every < 1) sample_every = 1;

    IntegrationRun run;
    const Vec L0 = monitors ? monitors->L(y0) : Vec();
    detail::record_sample(run, 0.0, y0, monitors, L0);

    SolverWorkspace ws;
    Vec y = y0;
    for (long n = 1; n <= n_steps; ++n) {
        try {
            const StepResult step = method.do_step(problem, monitors, y, h, settings, &ws);
            detail::tally(run.solver_stats, step);
            if (!step.converged) {
                run.failed = true;
                run.failure = method.name + ": solver did not converge at step " + std::to_string(n) +
                              " (h = " + std::to_string(h) + ")";
                break;
            }
            y = step.y1;
        } catch (const std::domain_error& e) {
            run.failed = true;
            run.failure = e.what();
            break;
        } catch (const std::runtime_error& e) {
            run.failed = true;
            run.failure = e.what();
            break;
        }
        run.step_sizes.push_back(h);
        if (n % sample_every == 0 || n == n_steps)
            detail::record_sample(run, static_cast<double>(n) * h, y, monitors, L0);
    }
    return run;
}

/// Adaptive integration with the stepsize controller
///   h_new = safety * h_old * (tol / ||e||)^(1/(p+1)),
/// where the local error e is estimated by step doubling: one step of h
/// against two of h/2, with the h/2 composite kept on acceptance. The raw
/// difference estimates the error of the discarded h-step; it is scaled by
/// 1/(2^p - 1) so that e tracks the local error of the solution actually
/// advanced. The final step is shortened to land on t_end exactly.
inline IntegrationRun integrate_adaptive(const Method& method, const ProblemDefinition& problem,
                                         const InvariantSet* monitors, const Vec& y0, double t_end,
                                         const AdaptiveSettings& adaptive,
                                         const SolverSettings& settings)
{
    if (t_end <= 0.0) throw std::invalid_argument("integrate_adaptive: t_end must be positive");
    if (!(adaptive.safety > 0.0 && adaptive.safety < 1.0))
        throw std::invalid_argument("integrate_adaptive: safety must be in (0,1)");
    if (!(adaptive.h_min <= adaptive.h_init && adaptive.h_init <= adaptive.h_max))
        throw std::invalid_argument("integrate_adaptive: need h_min <= h_init <= h_max");

    IntegrationRun run;
    const Vec L0 = monitors ? monitors->L(y0) : Vec();
    detail::record_sample(run, 0.0, y0, monitors, L0);

    SolverWorkspace ws_full, ws_half;
    Vec y = y0;
    double t = 0.0;
    double h = adaptive.h_init;
    const int p = method.order;
    int consecutive_rejections = 0;

    while (t < t_end * (1.0 - 1e-14)) {
        const double h_try = std::min(h, t_end - t);
        StepResult big, half1, half2;
        try {
            big = method.do_step(problem, monitors, y, h_try, settings, &ws_full);
            half1 = method.do_step(problem, monitors, y, 0.5 * h_try, settings, &ws_half);
            half2 = method.do_step(problem, monitors, half1.y1, 0.5 * h_try, settings, &ws_half);
        } catch (const std::domain_error& e) {
            run.failed = true;
            run.failure = e.what();
            return run;
        } catch (const std::runtime_error& e) {
            run.failed = true;
            run.failure = e.what();
            return run;
        }
        detail::tally(run.solver_stats, big);
        detail::tally(run.solver_stats, half1);
        detail::tally(run.solver_stats, half2);
        if (!big.converged || !half1.converged || !half2.converged) {
            // treat a solver failure as a rejection: halve and retry
            ++run.rejections;
            if (++consecutive_rejections > 20) {
                run.failed = true;
                run.failure = method.name + ": solver did not converge at t = " + std::to_string(t) +
                              " (h = " + std::to_string(h_try) + ")";
                return run;
            }
            if (h_try <= adaptive.h_min * (1.0 + 1e-12)) {
                run.failed = true;
                run.failure = method.name + ": stepsize underflow below h_min at t = " + std::to_string(t);
                return run;
            }
            h = std::clamp(0.5 * h_try, adaptive.h_min, adaptive.h_max);
            continue;
        }

        const double err = (half2.y1 - big.y1).norm() / (std::pow(2.0, p) - 1.0);
        const bool accept = err <= adaptive.tol;
        if (accept) {
            y = half2.y1;
            t += h_try;
            run.step_sizes.push_back(h_try);
            detail::record_sample(run, t, y, monitors, L0);
            consecutive_rejections = 0;
        } else {
            ++run.rejections;
            if (++consecutive_rejections > 20) {
                run.failed = true;
                run.failure = method.name + ": 20 consecutive rejections at t = " + std::to_string(t);
                return run;
            }
            if (h_try <= adaptive.h_min * (1.0 + 1e-12)) {
                run.failed = true;
                run.failure = method.name + ": stepsize underflow below h_min at t = " + std::to_string(t);
                return run;
            }
        }

        double h_new;
        if (err == 0.0) {
            h_new = adaptive.growth_cap * h_try;
        } else {
            h_new = adaptive.safety * h_try * std::pow(adaptive.tol / err, 1.0 / (p + 1));
            h_new = std::min(h_new, adaptive.growth_cap * h_try);
        }
        h = std::clamp(h_new, adaptive.h_min, adaptive.h_max);
    }
    return run;
}

/// Symmetry defect: step forward with f, then step the result with -f and
/// the same h; a symmetric method returns to y0 (up to solver tolerance).
inline double symmetry_defect(const Method& method, const ProblemDefinition& problem,
                              const InvariantSet* invariants, const Vec& y0, double h)
{
    SolverSettings tight;
    tight.tol = 1e-14;
    tight.max_outer = 200;
    tight.jacobian_policy =
        problem.jacobian ? JacobianPolicy::analytic : JacobianPolicy::finite_difference;

    const StepResult forward = method.do_step(problem, invariants, y0, h, tight, nullptr);
    if (!forward.converged) throw std::runtime_error("symmetry_defect: forward step did not converge");
    const ProblemDefinition reversed = negated(problem);
    const StepResult back = method.do_step(reversed, invariants, forward.y1, h, tight, nullptr);
    if (!back.converged) throw std::runtime_error("symmetry_defect: reversed step did not converge");
    return (back.y1 - y0).norm();
}

struct StabilityPoint {
    std::complex<double> q;
    double abs_R = 0.0;
    bool ok = true;  // false when I - qA is singular at this grid point
};

/// Linear stability function R(q) = 1 + q b^T (I - qA)^{-1} e, evaluated by
/// a direct complex solve of the stage system (no iteration).
inline std::vector<StabilityPoint> stability_scan(const ButcherTableau& t,
                                                  const std::vector<std::complex<double>>& grid)
{
    using CMat = Eigen::MatrixXcd;
    using CVec = Eigen::VectorXcd;
    const int k = t.stages;
    std::vector<StabilityPoint> out;
    out.reserve(grid.size());
    for (const auto& q : grid) {
        StabilityPoint pt;
        pt.q = q;
        const CMat W = CMat::Identity(k, k) - q * t.A.cast<std::complex<double>>();
        const Eigen::FullPivLU<CMat> lu(W);
        if (!lu.isInvertible()) {
            pt.ok = false;
            out.push_back(pt);
            continue;
        }
        const CVec Y = lu.solve(CVec::Ones(k));
        const std::complex<double> R = 1.0 + q * (t.b.cast<std::complex<double>>().dot(Y));
        pt.abs_R = std::abs(R);
        out.push_back(pt);
    }
    return out;
}

/// High-accuracy reference state at t_end: the library's own Gauss s = 8
/// integrator run at h_base/100.
inline Vec reference_solution(const ProblemDefinition& problem, const Vec& y0, double t_end,
                              double h_base)
{
    SolverSettings settings;
    settings.tol = 1e-14;
    settings.max_outer = 200;
    settings.jacobian_policy =
        problem.jacobian ? JacobianPolicy::analytic : JacobianPolicy::finite_difference;
    const Method gauss8 = make_gauss_method(8);
    const long n = std::max(1L, std::lround(std::ceil(t_end / (h_base / 100.0))));
    const double h = t_end / static_cast<double>(n);
    const IntegrationRun run =
        integrate_fixed(gauss8, problem, nullptr, y0, h, n, std::max(1L, n), settings);
    if (run.failed) throw std::runtime_error("reference_solution: " + run.failure);
    return run.states.back();
}

struct ConvergenceStudy {
    std::vector<double> h_used;   // actual stepsizes (rounded to divide t_end)
    std::vector<double> errors;   // ||y_N - reference|| at t_end
    double slope = 0.0;           // least-squares order over the fitted range
    int fit_points = 0;
    bool floored = false;         // trailing points hit the roundoff floor
};

/// Global-error order study: integrate to t_end for each h, compare against
/// the reference state, and fit log error against log h. Points that have
/// stagnated at the roundoff floor are excluded from the fit.
inline ConvergenceStudy convergence_study(const Method& method, const ProblemDefinition& problem,
                                          const InvariantSet* invariants, const Vec& y0, double t_end,
                                          const std::vector<double>& h_list, const Vec& reference,
                                          const SolverSettings& settings)
{
    ConvergenceStudy study;
    for (double h : h_list) {
        const long n = std::max(1L, std::lround(t_end / h));
        const double h_eff = t_end / static_cast<double>(n);
        const IntegrationRun run =
            integrate_fixed(method, problem, invariants, y0, h_eff, n, n, settings);
        if (run.failed) throw std::runtime_error("convergence_study: " + run.failure);
        study.h_used.push_back(h_eff);
        study.errors.push_back((run.states.back() - reference).norm());
    }

    // Truncate the fit before the roundoff floor: keep the largest prefix of
    // (sorted decreasing h) whose errors still decrease meaningfully.
    std::vector<double> hs = study.h_used, es = study.errors;
    std::size_t keep = hs.size();
    for (std::size_t i = 1; i < hs.size(); ++i) {
        if (es[i] < 1e-14 || es[i] > 0.5 * es[i - 1]) {
            keep = i + (es[i] >= 1e-14 ? 1 : 0);
            study.floored = true;
            break;
        }
    }
    keep = std::max<std::size_t>(keep, 2);
    hs.resize(keep);
    es.resize(keep);
    study.slope = loglog_slope(hs, es);
    study.fit_points = static_cast<int>(keep);
    return study;
}

/// Error at integer multiples of the period, for problems whose exact
/// solution returns to y0: matches samples whose time lies within a relative
/// 1e-6 of n*T and reports ||y(nT) - y0||.
inline std::vector<double> per_period_error(const IntegrationRun& run, const Vec& y0, double period)
{
    if (period <= 0.0) throw std::invalid_argument("per_period_error: period must be positive");
    std::vector<double> errors;
    std::size_t cursor = 0;
    for (int n = 0;; ++n) {
        const double target = static_cast<double>(n) * period;
        if (target > run.times.back() * (1.0 + 1e-12)) break;
        while (cursor + 1 < run.times.size() &&
               std::abs(run.times[cursor + 1] - target) <= std::abs(run.times[cursor] - target))
            ++cursor;
        if (std::abs(run.times[cursor] - target) > 1e-6 * (1.0 + target)) break;
        errors.push_back((run.states[cursor] - y0).norm());
    }
    return errors;
}

}  // namespace limint
