#pragma once

#include <Eigen/Dense>

namespace limint {

// Helpers for stacked block vectors: v holds s blocks of length m,
// block j living in v.segment(j*m, m).

/// (K kron I_m) v for a p x s coefficient matrix K.
inline Eigen::VectorXd kron_apply(const Eigen::MatrixXd& K, const Eigen::VectorXd& v, int m)
{
    const int s = static_cast<int>(K.cols());
    const int p = static_cast<int>(K.rows());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p * m);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < s; ++j)
            if (K(i, j) != 0.0) out.segment(i * m, m) += K(i, j) * v.segment(j * m, m);
    return out;
}

/// Dense I_{sm} - h (K kron J), used as the simplified-Newton iteration matrix.
inline Eigen::MatrixXd kron_newton_matrix(const Eigen::MatrixXd& K, const Eigen::MatrixXd& J, double h)
{
    const int s = static_cast<int>(K.rows());
    const int m = static_cast<int>(J.rows());
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(s * m, s * m);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            if (K(i, j) != 0.0) W.block(i * m, j * m, m, m) -= h * K(i, j) * J;
    return W;
}

}  // namespace limint
