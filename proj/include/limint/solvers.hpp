#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "limint/block.hpp"
#include "limint/errors.hpp"
#include "limint/legendre.hpp"
#include "limint/problems.hpp"

namespace limint {

enum class SolverKind { fixed_point, simplified_newton, blended_nonlinear, blended_outer_inner };
enum class JacobianPolicy { analytic, finite_difference };

struct SolverSettings {
    SolverKind kind = SolverKind::simplified_newton;
    double tol = 1e-13;
    int max_outer = 100;
    int max_inner = 5;  // inner sweeps of the outer-inner blended variant
    JacobianPolicy jacobian_policy = JacobianPolicy::analytic;
    int jacobian_reuse_limit = 10;  // refresh J0 when a step needed more iterations
};

struct SolverDiagnostics {
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  // ||gamma - G(gamma)||_inf at exit
};

inline Mat evaluate_jacobian(const ProblemDefinition& problem, const Vec& y, JacobianPolicy policy)
{
    if (policy == JacobianPolicy::analytic) {
        if (!problem.jacobian)
            throw std::invalid_argument("solver: analytic Jacobian requested but none is defined");
        return problem.jacobian(y);
    }
    // Forward differences, step sqrt(eps)*(1+|y_i|).
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    const Vec f0 = problem.f(y);
    Mat J(problem.dim, problem.dim);
    Vec yp = y;
    for (int i = 0; i < problem.dim; ++i) {
        const double step = sqrt_eps * (1.0 + std::abs(y[i]));
        yp[i] = y[i] + step;
        J.col(i) = (problem.f(yp) - f0) / step;
        yp[i] = y[i];
    }
    return J;
}

/// Optimal blended-iteration parameters for degree s, derived from the
/// spectrum of X_s: zeta is the minimum eigenvalue modulus, rho_star the
/// maximum amplification factor on the imaginary axis, rho_tilde the
/// nonstiff amplification factor.
struct BlendedParams {
    int s = 0;
    double zeta = 0.0;
    double rho_star = 0.0;
    double rho_tilde = 0.0;
    std::complex<double> mu1;    // eigenvalue of maximum argument
    Eigen::VectorXcd spectrum;   // all eigenvalues of X_s
};

inline BlendedParams blended_params(int s)
{
    if (s < 1 || s > 16) throw std::invalid_argument("blended_params: s out of range [1,16]");
    BlendedParams p;
    p.s = s;
    const Eigen::EigenSolver<Mat> eig(xs_matrix(s));
    p.spectrum = eig.eigenvalues();

    double max_arg = -1.0;
    for (int i = 0; i < p.spectrum.size(); ++i) {
        const std::complex<double> mu = p.spectrum[i];
        if (mu.imag() < 0.0) continue;  // keep one of each conjugate pair
        const double phi = std::abs(std::arg(mu));
        if (phi > max_arg) {
            max_arg = phi;
            p.mu1 = mu;
        }
    }
    p.zeta = p.spectrum.cwiseAbs().minCoeff();
    p.rho_star = 1.0 - std::cos(max_arg);
    p.rho_tilde = std::norm(p.mu1 - std::abs(p.mu1)) / std::abs(p.mu1);
    return p;
}

/// Spectral radius of the blended-iteration matrix at q, from the closed
/// form: each mu in sigma(X_s) contributes q (mu-zeta)^2 / (mu (1-q zeta)^2).
inline double blended_rho(const BlendedParams& p, std::complex<double> q)
{
    double rho = 0.0;
    for (int i = 0; i < p.spectrum.size(); ++i) {
        const std::complex<double> mu = p.spectrum[i];
        const std::complex<double> d = mu - p.zeta;
        const std::complex<double> den = mu * (1.0 - q * p.zeta) * (1.0 - q * p.zeta);
        rho = std::max(rho, std::abs(q * d * d / den));
    }
    return rho;
}

inline std::vector<double> convergence_region_scan(int s, const std::vector<std::complex<double>>& grid)
{
    const BlendedParams p = blended_params(s);
    std::vector<double> rho;
    rho.reserve(grid.size());
    for (const auto& q : grid) rho.push_back(blended_rho(p, q));
    return rho;
}

/// One outer update of the gamma iteration. Holds whatever factorization the
/// chosen scheme needs: I - h X_s kron J0 for simplified Newton, or the m x m
/// matrix I - h zeta J0 for the blended variants (theta applications are
/// triangular solves with that single factorization).
class GammaUpdater {
public:
    GammaUpdater() = default;

    GammaUpdater(SolverKind kind, const Mat& Xs, const Mat& J0, double h, int max_inner)
        : kind_(kind), h_(h), m_(static_cast<int>(J0.rows())), s_(static_cast<int>(Xs.rows())),
          max_inner_(max_inner), Xs_(Xs), J0_(J0)
    {
        if (kind_ == SolverKind::simplified_newton) {
            newton_lu_.compute(kron_newton_matrix(Xs_, J0_, h_));
            if (!newton_lu_.isInvertible())
                throw singular_iteration_error(
                    "simplified Newton: iteration matrix I - h X_s kron J0 is singular; reduce the stepsize");
        } else if (kind_ == SolverKind::blended_nonlinear || kind_ == SolverKind::blended_outer_inner) {
            zeta_ = blended_params(s_).zeta;
            scaled_Xs_inv_ = zeta_ * Xs_.inverse();
            omega_lu_.compute(Mat(Mat::Identity(m_, m_) - h_ * zeta_ * J0_));
            if (!omega_lu_.isInvertible())
                throw singular_iteration_error("blended iteration: I - h zeta J0 is singular; reduce the stepsize");
        }
    }

    static GammaUpdater fixed_point()
    {
        GammaUpdater u;
        u.kind_ = SolverKind::fixed_point;
        return u;
    }

    SolverKind kind() const { return kind_; }

    /// New gamma from the current iterate and its fixed-point image G(gamma).
    Vec update(const Vec& gamma, const Vec& G) const
    {
        switch (kind_) {
            case SolverKind::fixed_point:
                return G;
            case SolverKind::simplified_newton:
                return gamma + newton_lu_.solve(Vec(G - gamma));
            case SolverKind::blended_nonlinear:
                return gamma + blended_delta(Vec(gamma - G), 1);
            case SolverKind::blended_outer_inner:
            default:
                return gamma + blended_delta(Vec(gamma - G), max_inner_);
        }
    }

private:
    // theta = I_s kron (I - h zeta J0)^{-1}, applied block by block.
    Vec theta(const Vec& v) const
    {
        Vec out(v.size());
        for (int j = 0; j < s_; ++j) out.segment(j * m_, m_) = omega_lu_.solve(v.segment(j * m_, m_));
        return out;
    }

    // Blended correction for the system [I - h X_s kron J0] delta = -eta,
    // eta = F(gamma). One inner sweep reproduces the nonlinear variant
    // delta = theta [ theta (u - eta) - u ].
    Vec blended_delta(const Vec& eta, int inner_sweeps) const
    {
        Vec delta = Vec::Zero(eta.size());
        for (int r = 0; r < inner_sweeps; ++r) {
            Vec u, w;
            if (r == 0) {
                u = kron_apply(scaled_Xs_inv_, eta, m_);
                w = eta;
            } else {
                Vec z(eta.size());
                for (int j = 0; j < s_; ++j) z.segment(j * m_, m_) = J0_ * delta.segment(j * m_, m_);
                u = kron_apply(scaled_Xs_inv_, Vec(delta + eta), m_) - (h_ * zeta_) * z;
                w = delta + eta - kron_apply(Mat(h_ * Xs_), z, m_);
            }
            const Vec step = theta(u + theta(w - u));
            delta -= step;
            if (step.lpNorm<Eigen::Infinity>() <= 1e-2 * std::numeric_limits<double>::epsilon() *
                                                      (1.0 + delta.lpNorm<Eigen::Infinity>()))
                break;
        }
        return delta;
    }

    SolverKind kind_ = SolverKind::fixed_point;
    double h_ = 0.0, zeta_ = 0.0;
    int m_ = 0, s_ = 0, max_inner_ = 1;
    Mat Xs_, J0_, scaled_Xs_inv_;
    Eigen::FullPivLU<Mat> newton_lu_;
    Eigen::FullPivLU<Mat> omega_lu_;
};

/// Shared outer loop: iterate gamma until the max-norm increment satisfies
/// ||delta|| <= tol (1 + ||gamma||), with a final residual evaluation.
/// `after_update`, when set, refreshes slow-coupled quantities (the LIM
/// multiplier) and returns their own normalized increment.
inline std::pair<Vec, SolverDiagnostics> run_gamma_iteration(
    const std::function<Vec(const Vec&)>& map, const GammaUpdater& updater, Vec gamma,
    const SolverSettings& settings, const std::function<double(const Vec&)>& after_update = {})
{
    SolverDiagnostics diag;
    for (int it = 1; it <= settings.max_outer; ++it) {
        const Vec G = map(gamma);
        Vec next = updater.update(gamma, G);
        if (!next.allFinite())
            throw divergence_error("gamma iteration produced a non-finite iterate");
        const double dgamma = (next - gamma).lpNorm<Eigen::Infinity>();
        const double scale = 1.0 + next.lpNorm<Eigen::Infinity>();
        double extra = 0.0;
        if (after_update) extra = after_update(next);
        gamma = std::move(next);
        diag.iterations = it;
        if (dgamma <= settings.tol * scale && extra <= settings.tol) {
            diag.converged = true;
            break;
        }
    }
    diag.residual = (gamma - map(gamma)).lpNorm<Eigen::Infinity>();
    if (!diag.converged && diag.residual <= settings.tol * (1.0 + gamma.lpNorm<Eigen::Infinity>()))
        diag.converged = true;
    return {std::move(gamma), diag};
}

/// The HBVM fixed-point image G(gamma) = P_s^T Omega kron I f(stages(gamma)).
inline std::function<Vec(const Vec&)> hbvm_gamma_map(const ProblemDefinition& problem,
                                                     const SpectralMatrices& M, const Vec& y0, double h)
{
    const int m = problem.dim;
    const Mat PtOmega = M.P.transpose() * M.rule.weights.asDiagonal();
    return [&problem, M, PtOmega, y0, h, m](const Vec& gamma) {
        Vec fs(M.k * m);
        for (int i = 0; i < M.k; ++i) {
            Vec yi = y0;
            for (int j = 0; j < M.s; ++j) yi += h * M.I(i, j) * gamma.segment(j * m, m);
            fs.segment(i * m, m) = problem.f(yi);
        }
        return kron_apply(PtOmega, fs, m);
    };
}

/// Fixed-point iteration on a user-supplied gamma map.
inline std::pair<Vec, SolverDiagnostics> fixed_point_solve(const std::function<Vec(const Vec&)>& map,
                                                           Vec initial_gamma, const SolverSettings& settings)
{
    return run_gamma_iteration(map, GammaUpdater::fixed_point(), std::move(initial_gamma), settings);
}

/// Simplified Newton on the gamma system of an HBVM step: the iteration
/// matrix I - h X_s kron J0 is factored once, with J0 frozen at y0.
inline std::pair<Vec, SolverDiagnostics> simplified_newton_solve(const ProblemDefinition& problem,
                                                                 const Vec& y0, double h,
                                                                 const SpectralMatrices& M,
                                                                 const SolverSettings& settings)
{
    const Mat J0 = evaluate_jacobian(problem, y0, settings.jacobian_policy);
    const GammaUpdater updater(SolverKind::simplified_newton, M.X, J0, h, settings.max_inner);
    return run_gamma_iteration(hbvm_gamma_map(problem, M, y0, h), updater,
                               Vec::Zero(M.s * problem.dim), settings);
}

/// Blended iteration on the gamma system of an HBVM step. settings.kind
/// picks the nonlinear or the outer-inner variant (nonlinear by default).
inline std::pair<Vec, SolverDiagnostics> blended_solve(const ProblemDefinition& problem, const Vec& y0,
                                                       double h, const SpectralMatrices& M,
                                                       const SolverSettings& settings)
{
    const SolverKind kind = settings.kind == SolverKind::blended_outer_inner
                                ? SolverKind::blended_outer_inner
                                : SolverKind::blended_nonlinear;
    const Mat J0 = evaluate_jacobian(problem, y0, settings.jacobian_policy);
    const GammaUpdater updater(kind, M.X, J0, h, settings.max_inner);
    return run_gamma_iteration(hbvm_gamma_map(problem, M, y0, h), updater,
                               Vec::Zero(M.s * problem.dim), settings);
}

}  // namespace limint
