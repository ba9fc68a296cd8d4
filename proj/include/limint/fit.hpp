#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace limint {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double sse = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LinearFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_tot = 0, ss_res = 0;
    const double mean = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    fit.sse = ss_res;
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// Residual sum of squares of the best quadratic y = a + b x + c x^2.
inline double quadratic_fit_sse(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("quadratic_fit_sse: need >= 3 points");
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd V(n, 3);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        V(i, 0) = 1.0;
        V(i, 1) = x[i];
        V(i, 2) = x[i] * x[i];
        rhs[i] = y[i];
    }
    const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(rhs);
    return (V * coef - rhs).squaredNorm();
}

/// Least-squares slope of log(e) against log(h); the empirical order.
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& e)
{
    std::vector<double> lx, ly;
    lx.reserve(h.size());
    ly.reserve(e.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        lx.push_back(std::log(h[i]));
        ly.push_back(std::log(e[i]));
    }
    return linear_fit(lx, ly).slope;
}

}  // namespace limint
