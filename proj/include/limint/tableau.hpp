#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "limint/legendre.hpp"

namespace limint {

/// A Runge-Kutta tableau (c | A / b^T). rank_hint records the expected
/// numerical rank of A for low-rank methods (s for HBVM(k,s)).
struct ButcherTableau {
    int stages = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int order = 0;
    int rank_hint = 0;
};

/// Butcher form of HBVM(k,s): A = I_s P_s^T Omega with b, c from the
/// k-point Gauss rule. Order 2s; rank of A is s.
inline ButcherTableau hbvm_tableau(int k, int s)
{
    const SpectralMatrices M = build_matrices(k, s);  // validates k >= s >= 1
    ButcherTableau t;
    t.stages = k;
    t.A = M.I * M.P.transpose() * M.rule.weights.asDiagonal();
    t.b = M.rule.weights;
    t.c = M.rule.nodes;
    t.order = 2 * s;
    t.rank_hint = s;
    return t;
}

/// The s-stage Gauss-Legendre collocation method, as the k = s case.
inline ButcherTableau gauss_tableau(int s)
{
    return hbvm_tableau(s, s);
}

/// Interpolatory quadrature weights for arbitrary distinct nodes in [0,1]:
/// w_i = int_0^1 of the i-th Lagrange cardinal. Solved through the Legendre
/// basis, where only the P_0 coefficient contributes to the integral.
inline Eigen::VectorXd interpolatory_weights(const Eigen::VectorXd& nodes)
{
    const int n = static_cast<int>(nodes.size());
    Eigen::MatrixXd V(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V(i, j) = legendre_eval(j, nodes[i]);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
    e0[0] = 1.0;
    return V.transpose().partialPivLu().solve(e0);
}

/// nu-stage trapezoidal rule: equidistant abscissae c_i = (i-1)/(nu-1),
/// Newton-Cotes weights, and the rank-one matrix A = c b^T. Order 2.
inline ButcherTableau trapezoidal_tableau(int nu)
{
    if (nu < 2) throw std::invalid_argument("trapezoidal_tableau: nu must be >= 2");
    ButcherTableau t;
    t.stages = nu;
    t.c.resize(nu);
    for (int i = 0; i < nu; ++i) t.c[i] = static_cast<double>(i) / (nu - 1);
    t.b = interpolatory_weights(t.c);
    t.A = t.c * t.b.transpose();
    t.order = 2;
    t.rank_hint = 1;
    return t;
}

/// Frobenius norm of B A + A^T B - b b^T with B = diag(b); zero exactly for
/// symplectic methods.
inline double check_symplectic(const ButcherTableau& t)
{
    const Eigen::MatrixXd B = t.b.asDiagonal();
    const Eigen::MatrixXd R = B * t.A + t.A.transpose() * B - t.b * t.b.transpose();
    return R.norm();
}

/// Numerical rank: count of singular values above rel_tol * sigma_max.
inline int numerical_rank(const Eigen::MatrixXd& A, double rel_tol = 1e-10)
{
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > rel_tol * sv[0]) ++rank;
    return rank;
}

}  // namespace limint
