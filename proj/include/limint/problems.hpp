#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace limint {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A first-order autonomous system y' = f(y). The Jacobian is optional;
/// solvers fall back to finite differences when it is missing.
struct ProblemDefinition {
    int dim = 0;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> jacobian;  // empty when not available
    std::string description;
};

/// A set of nu functionally independent invariants L : R^m -> R^nu with
/// grad L(y)^T f(y) = 0. Columns of grad_L are the gradients. enforce_mask
/// selects which components a LIM step drives to exact conservation; the
/// rest are only monitored.
struct InvariantSet {
    int nu = 0;
    std::function<Vec(const Vec&)> L;
    std::function<Mat(const Vec&)> grad_L;  // m x nu
    std::vector<bool> enforce_mask;
    std::vector<std::string> names;

    int enforced_count() const
    {
        int n = 0;
        for (bool b : enforce_mask) n += b ? 1 : 0;
        return n;
    }
};

/// Canonical Hamiltonian system y' = J grad H(y) with y = (q, p) and
/// J = [0 I; -I 0]. The induced field puts grad_p H in the q-slots and
/// -grad_q H in the p-slots.
struct HamiltonianSystem {
    int half_dim = 0;
    std::function<double(const Vec&)> H;
    std::function<Vec(const Vec&)> grad_H;
    ProblemDefinition problem;
};

inline Vec canonical_field(int half_dim, const Vec& grad)
{
    Vec f(2 * half_dim);
    f.head(half_dim) = grad.tail(half_dim);
    f.tail(half_dim) = -grad.head(half_dim);
    return f;
}

/// Poisson system y' = B(y) grad H(y) with B skew-symmetric.
struct PoissonSystem {
    int dim = 0;
    std::function<Mat(const Vec&)> B;
    std::function<double(const Vec&)> H;
    std::function<Vec(const Vec&)> grad_H;
    ProblemDefinition problem;
};

/// grad L(y)^T f(y); zero (up to roundoff) when the invariants are genuine.
inline Vec check_invariant_orthogonality(const ProblemDefinition& problem,
                                         const InvariantSet& invariants, const Vec& y)
{
    if (y.size() != problem.dim)
        throw std::invalid_argument("check_invariant_orthogonality: state dimension mismatch");
    const Mat G = invariants.grad_L(y);
    if (G.rows() != problem.dim || G.cols() != invariants.nu)
        throw std::invalid_argument("check_invariant_orthogonality: gradient dimension mismatch");
    return G.transpose() * problem.f(y);
}

// ---------------------------------------------------------------------------
// Benchmark problems
// ---------------------------------------------------------------------------

struct KeplerSetup {
    HamiltonianSystem system;
    InvariantSet invariants;  // H, angular momentum, LRL scalar
    Vec y0;
    double period = 0.0;
};

/// Two-body Kepler problem, H = |p|^2/2 - 1/|q|, state ordered (q1,q2,p1,p2).
/// Invariants: the Hamiltonian, the angular momentum q1 p2 - q2 p1, and the
/// scalar component of the Laplace-Runge-Lenz vector. Starting on the x-axis
/// at distance 1-eps gives a period-2*pi orbit of eccentricity eps.
inline KeplerSetup kepler(double eps)
{
    if (!(eps >= 0.0 && eps < 1.0)) throw std::domain_error("kepler: eccentricity must be in [0,1)");

    auto radius = [](const Vec& y) {
        const double r = std::hypot(y[0], y[1]);
        if (r < 1e-12) throw std::domain_error("kepler: evaluation too close to collision (|q| < 1e-12)");
        return r;
    };

    KeplerSetup setup;
    setup.system.half_dim = 2;
    setup.system.H = [radius](const Vec& y) {
        const double r = radius(y);
        return 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / r;
    };
    setup.system.grad_H = [radius](const Vec& y) {
        const double r = radius(y);
        const double r3 = r * r * r;
        Vec g(4);
        g[0] = y[0] / r3;
        g[1] = y[1] / r3;
        g[2] = y[2];
        g[3] = y[3];
        return g;
    };
    setup.system.problem.dim = 4;
    setup.system.problem.description = "Kepler";
    {
        auto grad_H = setup.system.grad_H;
        setup.system.problem.f = [grad_H](const Vec& y) { return canonical_field(2, grad_H(y)); };
    }
    setup.system.problem.jacobian = [radius](const Vec& y) {
        const double r = radius(y);
        const double r3 = r * r * r, r5 = r3 * r * r;
        Mat J = Mat::Zero(4, 4);
        J(0, 2) = 1.0;
        J(1, 3) = 1.0;
        J(2, 0) = -1.0 / r3 + 3.0 * y[0] * y[0] / r5;
        J(2, 1) = 3.0 * y[0] * y[1] / r5;
        J(3, 0) = J(2, 1);
        J(3, 1) = -1.0 / r3 + 3.0 * y[1] * y[1] / r5;
        return J;
    };

    setup.invariants.nu = 3;
    setup.invariants.names = {"H", "L", "F"};
    setup.invariants.enforce_mask = {true, true, true};
    {
        auto H = setup.system.H;
        setup.invariants.L = [H, radius](const Vec& y) {
            Vec v(3);
            v[0] = H(y);
            v[1] = y[0] * y[3] - y[1] * y[2];
            v[2] = y[1] * y[2] * y[2] - y[0] * y[2] * y[3] - y[1] / radius(y);
            return v;
        };
    }
    {
        auto grad_H = setup.system.grad_H;
        setup.invariants.grad_L = [grad_H, radius](const Vec& y) {
            const double r = radius(y);
            const double r3 = r * r * r;
            Mat G(4, 3);
            G.col(0) = grad_H(y);
            G(0, 1) = y[3];
            G(1, 1) = -y[2];
            G(2, 1) = -y[1];
            G(3, 1) = y[0];
            G(0, 2) = -y[2] * y[3] + y[0] * y[1] / r3;
            G(1, 2) = y[2] * y[2] - 1.0 / r + y[1] * y[1] / r3;
            G(2, 2) = 2.0 * y[1] * y[2] - y[0] * y[3];
            G(3, 2) = -y[0] * y[2];
            return G;
        };
    }

    setup.y0.resize(4);
    setup.y0 << 1.0 - eps, 0.0, 0.0, std::sqrt((1.0 + eps) / (1.0 - eps));
    setup.period = 2.0 * std::acos(-1.0);
    return setup;
}

struct LotkaVolterraSetup {
    PoissonSystem system;
    InvariantSet invariants;  // H and the Casimir C
    Vec y0;
    double period = 0.0;
};

/// Three-species Lotka-Volterra system in Poisson form. The structure matrix
/// requires a*b*c = -1; H and the Casimir C involve logarithms, so all state
/// components must stay positive.
inline LotkaVolterraSetup lotka_volterra(double a, double b, double c, double nu_p, double mu_p)
{
    if (std::abs(a * b * c + 1.0) > 1e-12)
        throw std::invalid_argument("lotka_volterra: parameters must satisfy a*b*c = -1");

    auto require_positive = [](const Vec& y) {
        if (!(y[0] > 0.0 && y[1] > 0.0 && y[2] > 0.0))
            throw std::domain_error("lotka_volterra: state left the positive octant");
    };

    LotkaVolterraSetup setup;
    setup.system.dim = 3;
    setup.system.B = [b, c](const Vec& y) {
        Mat B = Mat::Zero(3, 3);
        B(0, 1) = c * y[0] * y[1];
        B(0, 2) = b * c * y[0] * y[2];
        B(1, 2) = -y[1] * y[2];
        B(1, 0) = -B(0, 1);
        B(2, 0) = -B(0, 2);
        B(2, 1) = -B(1, 2);
        return B;
    };
    setup.system.H = [a, b, nu_p, mu_p, require_positive](const Vec& y) {
        require_positive(y);
        return a * b * y[0] + y[1] - a * y[2] + nu_p * std::log(y[1]) - mu_p * std::log(y[2]);
    };
    setup.system.grad_H = [a, b, nu_p, mu_p, require_positive](const Vec& y) {
        require_positive(y);
        Vec g(3);
        g[0] = a * b;
        g[1] = 1.0 + nu_p / y[1];
        g[2] = -a - mu_p / y[2];
        return g;
    };
    setup.system.problem.dim = 3;
    setup.system.problem.description = "Lotka-Volterra";
    {
        auto B = setup.system.B;
        auto grad_H = setup.system.grad_H;
        setup.system.problem.f = [B, grad_H](const Vec& y) { return Vec(B(y) * grad_H(y)); };
    }
    setup.system.problem.jacobian = [a, b, c, nu_p, mu_p, require_positive](const Vec& y) {
        require_positive(y);
        // Product-rule Jacobian of f = B(y) grad H(y), written out with the
        // polynomial form of the components.
        Mat J(3, 3);
        J(0, 0) = c * (y[1] + nu_p) - b * c * (a * y[2] + mu_p);
        J(0, 1) = c * y[0];
        J(0, 2) = -a * b * c * y[0];
        J(1, 0) = -a * b * c * y[1];
        J(1, 1) = -a * b * c * y[0] + a * y[2] + mu_p;
        J(1, 2) = a * y[1];
        J(2, 0) = -a * b * b * c * y[2];
        J(2, 1) = y[2];
        J(2, 2) = -a * b * b * c * y[0] + y[1] + nu_p;
        return J;
    };

    setup.invariants.nu = 2;
    setup.invariants.names = {"H", "C"};
    setup.invariants.enforce_mask = {true, true};
    {
        auto H = setup.system.H;
        setup.invariants.L = [H, a, b, require_positive](const Vec& y) {
            require_positive(y);
            Vec v(2);
            v[0] = H(y);
            v[1] = a * b * std::log(y[0]) - b * std::log(y[1]) + std::log(y[2]);
            return v;
        };
        auto grad_H = setup.system.grad_H;
        setup.invariants.grad_L = [grad_H, a, b, require_positive](const Vec& y) {
            require_positive(y);
            Mat G(3, 2);
            G.col(0) = grad_H(y);
            G(0, 1) = a * b / y[0];
            G(1, 1) = -b / y[1];
            G(2, 1) = 1.0 / y[2];
            return G;
        };
    }

    setup.y0.resize(3);
    setup.y0 << 1.0, 1.9, 0.5;
    setup.period = 2.878130103817;
    return setup;
}

struct PolyHamiltonianSetup {
    HamiltonianSystem system;
    InvariantSet invariants;  // H alone
    int degree = 0;           // polynomial degree 2n, the conservation threshold
};

/// Polynomial Hamiltonian H(q,p) = p^2 + (beta q)^2 + alpha (q+p)^(2n),
/// state (q,p). Degree 2n decides which HBVM(k,s) conserve it exactly.
inline PolyHamiltonianSetup poly_hamiltonian(double alpha, double beta, int n)
{
    if (n < 1) throw std::invalid_argument("poly_hamiltonian: n must be >= 1");

    PolyHamiltonianSetup setup;
    setup.degree = 2 * n;
    setup.system.half_dim = 1;
    setup.system.H = [alpha, beta, n](const Vec& y) {
        return y[1] * y[1] + beta * beta * y[0] * y[0] + alpha * std::pow(y[0] + y[1], 2 * n);
    };
    setup.system.grad_H = [alpha, beta, n](const Vec& y) {
        const double mixed = 2.0 * n * alpha * std::pow(y[0] + y[1], 2 * n - 1);
        Vec g(2);
        g[0] = 2.0 * beta * beta * y[0] + mixed;
        g[1] = 2.0 * y[1] + mixed;
        return g;
    };
    setup.system.problem.dim = 2;
    setup.system.problem.description = "polynomial Hamiltonian";
    {
        auto grad_H = setup.system.grad_H;
        setup.system.problem.f = [grad_H](const Vec& y) { return canonical_field(1, grad_H(y)); };
    }
    setup.system.problem.jacobian = [alpha, beta, n](const Vec& y) {
        const double w = 2.0 * n * (2.0 * n - 1.0) * alpha * std::pow(y[0] + y[1], 2 * n - 2);
        Mat J(2, 2);
        J(0, 0) = w;
        J(0, 1) = 2.0 + w;
        J(1, 0) = -2.0 * beta * beta - w;
        J(1, 1) = -w;
        return J;
    };

    setup.invariants.nu = 1;
    setup.invariants.names = {"H"};
    setup.invariants.enforce_mask = {true};
    {
        auto H = setup.system.H;
        setup.invariants.L = [H](const Vec& y) {
            Vec v(1);
            v[0] = H(y);
            return v;
        };
        auto grad_H = setup.system.grad_H;
        setup.invariants.grad_L = [grad_H](const Vec& y) {
            Mat G(2, 1);
            G.col(0) = grad_H(y);
            return G;
        };
    }
    return setup;
}

/// The same problem with the velocity field negated; used by the symmetry
/// harness, which integrates forward and then back.
inline ProblemDefinition negated(const ProblemDefinition& problem)
{
    ProblemDefinition out;
    out.dim = problem.dim;
    out.description = problem.description + " (reversed)";
    {
        auto f = problem.f;
        out.f = [f](const Vec& y) { return Vec(-f(y)); };
    }
    if (problem.jacobian) {
        auto jac = problem.jacobian;
        out.jacobian = [jac](const Vec& y) { return Mat(-jac(y)); };
    }
    return out;
}

}  // namespace limint
