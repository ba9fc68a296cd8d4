#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "limint/block.hpp"
#include "limint/errors.hpp"
#include "limint/fit.hpp"
#include "limint/legendre.hpp"
#include "limint/problems.hpp"
#include "limint/solvers.hpp"
#include "limint/tableau.hpp"

namespace limint {

struct HBVMConfig {
    int k = 0, s = 0;
    SpectralMatrices matrices;
};

inline HBVMConfig make_hbvm_config(int k, int s)
{
    return {k, s, build_matrices(k, s)};
}

/// LIM(r,k,s): the k-point Gauss rule drives the vector-field quadrature,
/// the r-point rule the invariant-gradient quadrature. r = 0 disables the
/// conservation correction, recovering HBVM(k,s).
struct LIMConfig {
    int r = 0, k = 0, s = 0;
    SpectralMatrices matrices;  // built on the k-point rule
    QuadratureRule phi_rule;    // r-point rule (unused when r = 0)
    Eigen::MatrixXd P_tau;      // r x s, P_j(tau_l)
    Eigen::MatrixXd I_tau;      // r x s, int_0^{tau_l} P_j
};

inline LIMConfig make_lim_config(int r, int k, int s)
{
    if (r != 0 && r < s)
        throw std::invalid_argument("make_lim_config: need r = 0 or r >= s");
    LIMConfig cfg;
    cfg.r = r;
    cfg.k = k;
    cfg.s = s;
    cfg.matrices = build_matrices(k, s);
    if (r > 0) {
        cfg.phi_rule = gauss_rule(r);
        cfg.P_tau.resize(r, s);
        cfg.I_tau.resize(r, s);
        for (int l = 0; l < r; ++l) {
            for (int j = 0; j < s; ++j) {
                cfg.P_tau(l, j) = legendre_eval(j, cfg.phi_rule.nodes[l]);
                cfg.I_tau(l, j) = legendre_integral(j, cfg.phi_rule.nodes[l]);
            }
        }
    }
    return cfg;
}

struct StepResult {
    Vec y1;
    Vec gamma_hat;                        // s blocks of length m, stacked
    std::vector<Eigen::MatrixXd> phi_hat; // s blocks of m x nu_enforced; empty when r = 0
    Vec alpha;                            // nu_enforced; zero-length when r = 0
    std::vector<Vec> stages;              // u(c_i h), i = 1..k
    int iterations = 0;
    bool converged = false;
    double solver_residual = 0.0;
    int m = 0, s = 0;

    Vec gamma_block(int j) const { return gamma_hat.segment(j * m, m); }
};

/// Solve [phi_0^T phi_0] alpha = sum_j phi_j^T gamma_j. The Gram matrix is
/// symmetric positive definite when the enforced invariants are independent;
/// a near-zero eigenvalue ratio signals constraint degeneracy. The test and
/// the solve run on the column-equilibrated Gram matrix, so that invariants
/// of very different gradient scales are judged by their angles.
inline Vec solve_alpha(const std::vector<Eigen::MatrixXd>& phi_hat, const Vec& gamma_hat)
{
    const int s = static_cast<int>(phi_hat.size());
    if (s == 0) throw std::invalid_argument("solve_alpha: no phi blocks");
    const int m = static_cast<int>(phi_hat[0].rows());
    const int nu = static_cast<int>(phi_hat[0].cols());

    Vec scale(nu);
    for (int j = 0; j < nu; ++j) {
        const double n = phi_hat[0].col(j).norm();
        scale[j] = n > 0.0 ? 1.0 / n : 1.0;
    }
    const Mat M0 = scale.asDiagonal() * (phi_hat[0].transpose() * phi_hat[0]) * scale.asDiagonal();
    Vec rhs = Vec::Zero(nu);
    for (int j = 0; j < s; ++j) rhs += phi_hat[j].transpose() * gamma_hat.segment(j * m, m);
    rhs = scale.asDiagonal() * rhs;

    const Eigen::SelfAdjointEigenSolver<Mat> eig(M0);
    const auto& ev = eig.eigenvalues();
    if (ev[0] < 1e-12 * ev[nu - 1])
        throw degeneracy_error("solve_alpha: enforced invariant gradients are numerically dependent");
    const Vec beta = eig.eigenvectors() * (eig.eigenvectors().transpose() * rhs).cwiseQuotient(ev);
    return scale.asDiagonal() * beta;
}

/// Cached solver state for reuse across accepted steps: the frozen Jacobian
/// factorization is kept until a step needs more iterations than the
/// configured threshold, or the stepsize/kind changes.
struct SolverWorkspace {
    bool valid = false;
    SolverKind kind = SolverKind::fixed_point;
    double h = 0.0;
    int sm = 0;
    GammaUpdater updater;
    int last_iterations = 0;
};

namespace detail {

struct MaskInfo {
    std::vector<int> columns;  // indices of enforced invariants
    int count = 0;
};

inline MaskInfo mask_info(const InvariantSet& invariants)
{
    MaskInfo info;
    for (int i = 0; i < invariants.nu; ++i)
        if (i < static_cast<int>(invariants.enforce_mask.size()) && invariants.enforce_mask[i])
            info.columns.push_back(i);
    info.count = static_cast<int>(info.columns.size());
    return info;
}

inline Mat masked_gradient(const InvariantSet& invariants, const MaskInfo& mask, const Vec& y)
{
    const Mat G = invariants.grad_L(y);
    Mat Gm(G.rows(), mask.count);
    for (int j = 0; j < mask.count; ++j) Gm.col(j) = G.col(mask.columns[j]);
    return Gm;
}

/// One-step engine shared by hbvm_step and lim_step; with invariants == null
/// (or r = 0) the correction machinery is inert and the step is plain HBVM.
inline StepResult gamma_step(const LIMConfig& cfg, const ProblemDefinition& problem,
                             const InvariantSet* invariants, const Vec& y0, double h,
                             const SolverSettings& settings, SolverWorkspace* ws)
{
    if (h < 0.0) throw std::invalid_argument("step: negative stepsize");
    const int m = problem.dim;
    const int s = cfg.s;
    const int k = cfg.k;
    const SpectralMatrices& M = cfg.matrices;
    const bool corrected = cfg.r > 0 && invariants != nullptr;
    const MaskInfo mask = corrected ? mask_info(*invariants) : MaskInfo{};

    StepResult result;
    result.m = m;
    result.s = s;

    if (h == 0.0) {
        result.y1 = y0;
        result.gamma_hat = Vec::Zero(s * m);
        result.stages.assign(k, y0);
        if (corrected) {
            result.phi_hat.assign(s, Mat::Zero(m, mask.count));
            result.alpha = Vec::Zero(mask.count);
        }
        result.converged = true;
        return result;
    }

    if (corrected) {
        if (mask.count == 0)
            throw std::invalid_argument("lim_step: r > 0 but no invariant is enforced");
        if (numerical_rank(masked_gradient(*invariants, mask, y0), 1e-12) < mask.count)
            throw degeneracy_error("lim_step: masked invariant gradient is rank deficient at y0");
    }

    // Mutable sweep state for the invariant correction.
    Vec correction = Vec::Zero(m);
    Vec alpha = Vec::Zero(mask.count);
    std::vector<Mat> phi_hat(corrected ? s : 0, Mat::Zero(m, mask.count));

    const Mat PtOmega = M.P.transpose() * M.rule.weights.asDiagonal();
    auto stage_value = [&](int i, const Vec& gamma) {
        Vec yi = y0;
        for (int j = 0; j < s; ++j) yi += h * M.I(i, j) * gamma.segment(j * m, m);
        if (corrected) yi -= h * M.rule.nodes[i] * correction;
        return yi;
    };
    auto gamma_map = [&](const Vec& gamma) {
        Vec fs(k * m);
        for (int i = 0; i < k; ++i) fs.segment(i * m, m) = problem.f(stage_value(i, gamma));
        return kron_apply(PtOmega, fs, m);
    };

    // Gauss-Seidel refresh of phi-hat and alpha from the current polynomial,
    // evaluated at the r-point abscissae.
    auto refresh_alpha = [&](const Vec& gamma) -> double {
        for (int j = 0; j < s; ++j) phi_hat[j].setZero();
        for (int l = 0; l < cfg.r; ++l) {
            Vec ul = y0;
            for (int j = 0; j < s; ++j) ul += h * cfg.I_tau(l, j) * gamma.segment(j * m, m);
            ul -= h * cfg.phi_rule.nodes[l] * correction;
            const Mat G = masked_gradient(*invariants, mask, ul);
            for (int j = 0; j < s; ++j) phi_hat[j] += cfg.phi_rule.weights[l] * cfg.P_tau(l, j) * G;
        }
        const Vec next_alpha = solve_alpha(phi_hat, gamma);
        alpha = next_alpha;
        const Vec next_correction = phi_hat[0] * alpha;
        // Convergence is judged on the correction phi_0 alpha, which lives on
        // the same scale as gamma; alpha itself can be noisy when the Gram
        // matrix is ill-conditioned even though the correction is stable.
        const double dcorr = (next_correction - correction).lpNorm<Eigen::Infinity>() /
                             (1.0 + gamma.lpNorm<Eigen::Infinity>());
        correction = next_correction;
        return dcorr;
    };

    // Prepare (or reuse) the outer updater.
    bool reused = false;
    GammaUpdater updater = GammaUpdater::fixed_point();
    auto fresh_updater = [&]() {
        const Mat J0 = evaluate_jacobian(problem, y0, settings.jacobian_policy);
        return GammaUpdater(settings.kind, M.X, J0, h, settings.max_inner);
    };
    if (settings.kind != SolverKind::fixed_point) {
        if (ws && ws->valid && ws->kind == settings.kind && ws->h == h && ws->sm == s * m &&
            ws->last_iterations <= settings.jacobian_reuse_limit) {
            updater = ws->updater;
            reused = true;
        } else {
            updater = fresh_updater();
        }
    }

    auto run = [&](Vec start) {
        return run_gamma_iteration(gamma_map, updater, std::move(start), settings,
                                   corrected ? std::function<double(const Vec&)>(refresh_alpha)
                                             : std::function<double(const Vec&)>{});
    };
    auto [gamma, diag] = run(Vec::Zero(s * m));
    if (!diag.converged && reused) {  // stale Jacobian: retry once with a fresh one
        updater = fresh_updater();
        reused = false;
        auto retry = run(std::move(gamma));
        gamma = std::move(retry.first);
        diag.iterations += retry.second.iterations;
        diag.converged = retry.second.converged;
        diag.residual = retry.second.residual;
    }
    if (ws && settings.kind != SolverKind::fixed_point) {
        ws->valid = true;
        ws->kind = settings.kind;
        ws->h = h;
        ws->sm = s * m;
        ws->updater = updater;
        ws->last_iterations = diag.iterations;
    }

    result.gamma_hat = gamma;
    result.iterations = diag.iterations;
    result.converged = diag.converged;
    result.solver_residual = diag.residual;
    result.stages.reserve(k);
    for (int i = 0; i < k; ++i) result.stages.push_back(stage_value(i, gamma));
    result.y1 = y0 + h * gamma.head(m);
    if (corrected) {
        result.y1 -= h * correction;
        result.phi_hat = std::move(phi_hat);
        result.alpha = alpha;
    }
    return result;
}

}  // namespace detail

/// One HBVM(k,s) step: solve the gamma system, then y1 = y0 + h gamma_0.
/// Non-convergence is reported in the result, never silently.
inline StepResult hbvm_step(const HBVMConfig& cfg, const ProblemDefinition& problem, const Vec& y0,
                            double h, const SolverSettings& settings, SolverWorkspace* ws = nullptr)
{
    LIMConfig as_lim;
    as_lim.r = 0;
    as_lim.k = cfg.k;
    as_lim.s = cfg.s;
    as_lim.matrices = cfg.matrices;
    return detail::gamma_step(as_lim, problem, nullptr, y0, h, settings, ws);
}

/// One LIM(r,k,s) step: the gamma system is solved with the rank-nu
/// correction -phi_0 alpha refreshed from the current polynomial each sweep;
/// y1 = y0 + h gamma_0 - h phi_0 alpha. With r = 0 this is exactly hbvm_step.
inline StepResult lim_step(const LIMConfig& cfg, const ProblemDefinition& problem,
                           const InvariantSet& invariants, const Vec& y0, double h,
                           const SolverSettings& settings, SolverWorkspace* ws = nullptr)
{
    return detail::gamma_step(cfg, problem, cfg.r > 0 ? &invariants : nullptr, y0, h, settings, ws);
}

/// Generic implicit Runge-Kutta step for an explicit tableau: stages solved
/// by fixed point or simplified Newton on the full stage system. Used for
/// the trapezoidal rules and as an independent route to the HBVM map.
inline StepResult rk_step(const ButcherTableau& t, const ProblemDefinition& problem, const Vec& y0,
                          double h, const SolverSettings& settings)
{
    const int m = problem.dim;
    const int k = t.stages;
    StepResult result;
    result.m = m;
    result.s = 0;
    if (h < 0.0) throw std::invalid_argument("rk_step: negative stepsize");
    if (h == 0.0) {
        result.y1 = y0;
        result.stages.assign(k, y0);
        result.converged = true;
        return result;
    }

    Eigen::FullPivLU<Mat> newton_lu;
    const bool use_newton = settings.kind != SolverKind::fixed_point;
    if (use_newton) {
        const Mat J0 = evaluate_jacobian(problem, y0, settings.jacobian_policy);
        newton_lu.compute(kron_newton_matrix(t.A, J0, h));
        if (!newton_lu.isInvertible())
            throw singular_iteration_error("rk_step: stage iteration matrix is singular; reduce the stepsize");
    }

    Vec Z(k * m);
    for (int i = 0; i < k; ++i) Z.segment(i * m, m) = y0;
    SolverDiagnostics diag;
    Vec fs(k * m);
    auto image = [&](const Vec& stages) {
        for (int i = 0; i < k; ++i) fs.segment(i * m, m) = problem.f(stages.segment(i * m, m));
        Vec img(k * m);
        for (int i = 0; i < k; ++i) {
            Vec zi = y0;
            for (int j = 0; j < k; ++j)
                if (t.A(i, j) != 0.0) zi += h * t.A(i, j) * fs.segment(j * m, m);
            img.segment(i * m, m) = zi;
        }
        return img;
    };
    for (int it = 1; it <= settings.max_outer; ++it) {
        const Vec img = image(Z);
        Vec next = use_newton ? Vec(Z + newton_lu.solve(Vec(img - Z))) : img;
        if (!next.allFinite()) throw divergence_error("rk_step: non-finite stage iterate");
        const double dz = (next - Z).lpNorm<Eigen::Infinity>();
        Z = std::move(next);
        diag.iterations = it;
        if (dz <= settings.tol * (1.0 + Z.lpNorm<Eigen::Infinity>())) {
            diag.converged = true;
            break;
        }
    }
    diag.residual = (Z - image(Z)).lpNorm<Eigen::Infinity>();

    result.y1 = y0;
    for (int i = 0; i < k; ++i) result.y1 += h * t.b[i] * problem.f(Z.segment(i * m, m));
    result.stages.reserve(k);
    for (int i = 0; i < k; ++i) result.stages.push_back(Z.segment(i * m, m));
    result.iterations = diag.iterations;
    result.converged = diag.converged;
    result.solver_residual = diag.residual;
    return result;
}

struct AlphaScalingResult {
    double slope = 0.0;
    bool saturated = false;            // all multipliers at the roundoff floor
    std::vector<double> alpha_norms;   // one ||alpha|| per stepsize
};

/// Empirical order of the conservation multiplier: least-squares slope of
/// log ||alpha|| against log h over a decreasing stepsize list.
inline AlphaScalingResult alpha_scaling_probe(const LIMConfig& cfg, const ProblemDefinition& problem,
                                              const InvariantSet& invariants, const Vec& y0,
                                              const std::vector<double>& h_list,
                                              const SolverSettings& settings)
{
    if (cfg.r == 0)
        throw std::invalid_argument("alpha_scaling_probe: r = 0 has no multiplier to probe");
    AlphaScalingResult res;
    std::vector<double> hs, norms;
    for (double h : h_list) {
        const StepResult step = lim_step(cfg, problem, invariants, y0, h, settings);
        const double a = step.alpha.norm();
        res.alpha_norms.push_back(a);
        if (a >= 1e-15) {
            hs.push_back(h);
            norms.push_back(a);
        }
    }
    if (hs.size() < 2) {
        res.saturated = true;
        return res;
    }
    res.slope = loglog_slope(hs, norms);
    return res;
}

}  // namespace limint
