#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "limint/errors.hpp"

namespace limint {

// Shifted Legendre polynomials on [0,1], scaled to be orthonormal:
// deg P_j = j, int_0^1 P_i P_j = delta_ij. Everything else in the library
// (quadrature rules, spectral matrices, one-step methods) is built on them.

/// Value of the shifted orthonormal Legendre polynomial P_j at c,
/// by the 3-term recurrence. Total function; c outside [0,1] is allowed.
inline double legendre_eval(int j, double c)
{
    if (j < 0) throw std::invalid_argument("legendre_eval: negative degree");
    const double t = 2.0 * c - 1.0;
    double pm1 = 1.0;                    // P_0
    if (j == 0) return pm1;
    double p = std::sqrt(3.0) * t;       // P_1
    for (int i = 1; i < j; ++i) {
        const double a = (2.0 * i + 1.0) / (i + 1.0) * std::sqrt((2.0 * i + 3.0) / (2.0 * i + 1.0));
        const double b = static_cast<double>(i) / (i + 1.0) * std::sqrt((2.0 * i + 3.0) / (2.0 * i - 1.0));
        const double pn = t * a * p - b * pm1;
        pm1 = p;
        p = pn;
    }
    return p;
}

/// P_j(c) together with its derivative, for Newton root polishing.
inline std::pair<double, double> legendre_eval_with_deriv(int j, double c)
{
    if (j < 0) throw std::invalid_argument("legendre_eval_with_deriv: negative degree");
    const double t = 2.0 * c - 1.0;
    double pm1 = 1.0, dm1 = 0.0;
    if (j == 0) return {pm1, dm1};
    double p = std::sqrt(3.0) * t;
    double d = 2.0 * std::sqrt(3.0);
    for (int i = 1; i < j; ++i) {
        const double a = (2.0 * i + 1.0) / (i + 1.0) * std::sqrt((2.0 * i + 3.0) / (2.0 * i + 1.0));
        const double b = static_cast<double>(i) / (i + 1.0) * std::sqrt((2.0 * i + 3.0) / (2.0 * i - 1.0));
        const double pn = t * a * p - b * pm1;
        const double dn = 2.0 * a * p + t * a * d - b * dm1;
        pm1 = p; dm1 = d;
        p = pn; d = dn;
    }
    return {p, d};
}

/// xi_i = 1 / (2 sqrt(4 i^2 - 1)), the coefficients linking integrated
/// Legendre polynomials back to the basis.
inline double xi_coefficient(int i)
{
    if (i < 1) throw std::invalid_argument("xi_coefficient: index must be >= 1");
    return 0.5 / std::sqrt(4.0 * static_cast<double>(i) * i - 1.0);
}

/// int_0^c P_j(x) dx, via the xi-relations:
///   int_0^c P_0 = xi_1 P_1(c) + P_0(c)/2
///   int_0^c P_j = xi_{j+1} P_{j+1}(c) - xi_j P_{j-1}(c),  j >= 1.
inline double legendre_integral(int j, double c)
{
    if (j < 0) throw std::invalid_argument("legendre_integral: negative degree");
    if (j == 0) return xi_coefficient(1) * legendre_eval(1, c) + 0.5;
    return xi_coefficient(j + 1) * legendre_eval(j + 1, c) - xi_coefficient(j) * legendre_eval(j - 1, c);
}

/// Gauss-Legendre quadrature on [0,1]: the k nodes are the roots of P_k,
/// the rule is exact for polynomials of degree <= 2k-1.
struct QuadratureRule {
    int k = 0;
    Eigen::VectorXd nodes;    // strictly increasing, in (0,1)
    Eigen::VectorXd weights;  // positive, summing to 1
    int order = 0;            // 2k
};

inline constexpr int kMaxQuadratureStages = 32;

/// Build the k-point Gauss-Legendre rule on [0,1]. Nodes are found by a
/// Newton iteration on P_k from interlacing initial guesses, polished to
/// residual <= 1e-14; weights come from the Christoffel identity
/// b_i = 1 / sum_{j<k} P_j(c_i)^2, which equals the exact integral of the
/// i-th Lagrange cardinal at the Gauss abscissae.
inline QuadratureRule gauss_rule(int k)
{
    if (k < 1 || k > kMaxQuadratureStages)
        throw std::invalid_argument("gauss_rule: stage count out of supported range [1,32]");

    QuadratureRule rule;
    rule.k = k;
    rule.order = 2 * k;
    rule.nodes.resize(k);
    rule.weights.resize(k);

    const double pi = std::acos(-1.0);
    for (int i = 0; i < k; ++i) {
        // Chebyshev-like guess on [-1,1], mapped to [0,1] with increasing index.
        double c = 0.5 * (1.0 - std::cos(pi * (i + 0.75) / (k + 0.5)));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre_eval_with_deriv(k, c);
            const double delta = p / dp;
            c -= delta;
            if (std::abs(delta) < 1e-16) break;
        }
        rule.nodes[i] = c;
    }

    // Enforce the c_i = 1 - c_{k-i+1} symmetry exactly at working precision.
    for (int i = 0; i < k / 2; ++i) {
        const double avg = 0.5 * (rule.nodes[i] + 1.0 - rule.nodes[k - 1 - i]);
        rule.nodes[i] = avg;
        rule.nodes[k - 1 - i] = 1.0 - avg;
    }
    if (k % 2 == 1) rule.nodes[k / 2] = 0.5;

    for (int i = 0; i < k; ++i) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double pj = legendre_eval(j, rule.nodes[i]);
            sum += pj * pj;
        }
        rule.weights[i] = 1.0 / sum;
    }
    for (int i = 0; i < k / 2; ++i) {
        const double avg = 0.5 * (rule.weights[i] + rule.weights[k - 1 - i]);
        rule.weights[i] = avg;
        rule.weights[k - 1 - i] = avg;
    }
    return rule;
}

/// The method-defining matrices for a (k,s) pair, all built from the k-point
/// Gauss rule and the Legendre basis:
///   P:    k x s,      P_{ij} = P_j(c_i)
///   I:    k x s,      I_{ij} = int_0^{c_i} P_j
///   Xhat: (s+1) x s,  I = P_{s+1} Xhat  (xi-coefficient band)
///   X:    s x s,      leading block of Xhat
struct SpectralMatrices {
    int k = 0, s = 0;
    QuadratureRule rule;
    Eigen::MatrixXd P;
    Eigen::MatrixXd I;
    Eigen::MatrixXd Xhat;
    Eigen::MatrixXd X;

    Eigen::MatrixXd omega() const
    {
        return rule.weights.asDiagonal();
    }
};

/// Dense s x s matrix X_s of xi coefficients; its spectrum equals the
/// nonzero spectrum of every HBVM(k,s) Butcher matrix.
inline Eigen::MatrixXd xs_matrix(int s)
{
    if (s < 1) throw std::invalid_argument("xs_matrix: s must be >= 1");
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(s, s);
    X(0, 0) = 0.5;
    for (int j = 1; j < s; ++j) {
        X(j - 1, j) = -xi_coefficient(j);
        X(j, j - 1) = xi_coefficient(j);
    }
    return X;
}

inline SpectralMatrices build_matrices(int k, int s)
{
    if (s < 1) throw std::invalid_argument("build_matrices: s must be >= 1");
    if (k < s) throw std::invalid_argument("build_matrices: k must be >= s");

    SpectralMatrices M;
    M.k = k;
    M.s = s;
    M.rule = gauss_rule(k);
    M.P.resize(k, s);
    M.I.resize(k, s);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < s; ++j) {
            M.P(i, j) = legendre_eval(j, M.rule.nodes[i]);
            M.I(i, j) = legendre_integral(j, M.rule.nodes[i]);
        }
    }
    M.Xhat = Eigen::MatrixXd::Zero(s + 1, s);
    M.Xhat.topLeftCorner(s, s) = xs_matrix(s);
    M.Xhat(s, s - 1) = xi_coefficient(s);
    M.X = M.Xhat.topLeftCorner(s, s);
    return M;
}

}  // namespace limint
