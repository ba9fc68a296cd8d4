#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "limint/integrate.hpp"
#include "limint/problems.hpp"
#include "limint/step.hpp"
#include "limint/tableau.hpp"

using limint::hbvm_step;
using limint::HBVMConfig;
using limint::InvariantSet;
using limint::lim_step;
using limint::LIMConfig;
using limint::make_hbvm_config;
using limint::make_lim_config;
using limint::Mat;
using limint::rk_step;
using limint::solve_alpha;
using limint::SolverSettings;
using limint::StepResult;
using limint::Vec;

namespace {

SolverSettings tight()
{
    SolverSettings st;
    st.tol = 1e-14;
    st.max_outer = 200;
    return st;
}

}  // namespace

TEST_CASE("hbvm_step on the zero field")
{
    limint::ProblemDefinition zero;
    zero.dim = 3;
    zero.f = [](const Vec& y) { return Vec(Vec::Zero(y.size())); };
    zero.jacobian = [](const Vec& y) { return Mat(Mat::Zero(y.size(), y.size())); };
    Vec y0(3);
    y0 << 1.0, -2.0, 0.5;

    const auto cfg = make_hbvm_config(3, 2);
    const auto step = hbvm_step(cfg, zero, y0, 0.1, tight());
    CHECK(step.converged);
    CHECK(step.iterations == 1);
    CHECK((step.y1 - y0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(step.gamma_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate h = 0 step returns y0 without invoking the solver")
{
    const auto kp = limint::kepler(0.6);
    const auto cfg = make_hbvm_config(2, 2);
    const auto step = hbvm_step(cfg, kp.system.problem, kp.y0, 0.0, tight());
    CHECK(step.converged);
    CHECK(step.iterations == 0);
    CHECK((step.y1 - kp.y0).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(hbvm_step(cfg, kp.system.problem, kp.y0, -0.1, tight()), std::invalid_argument);
}

TEST_CASE("one HBVM(2,2) Kepler step agrees with a tight reference")
{
    const auto kp = limint::kepler(0.6);
    const double h = 1e-3;
    const auto cfg = make_hbvm_config(2, 2);
    const auto step = hbvm_step(cfg, kp.system.problem, kp.y0, h, tight());
    REQUIRE(step.converged);
    const Vec ref = limint::reference_solution(kp.system.problem, kp.y0, h, h);
    CHECK((step.y1 - ref).norm() <= 1e-12);
}

TEST_CASE("step result exposes the collocation structure")
{
    const auto kp = limint::kepler(0.6);
    const double h = 0.01;
    const auto cfg = make_hbvm_config(4, 2);
    const auto step = hbvm_step(cfg, kp.system.problem, kp.y0, h, tight());
    REQUIRE(step.converged);

    // y1 = y0 + h gamma_0
    CHECK((step.y1 - (kp.y0 + h * step.gamma_block(0))).norm() <=
          1e-13 * (1.0 + step.y1.norm()));
    // stages are the polynomial at the abscissae
    for (int i = 0; i < 4; ++i) {
        Vec yi = kp.y0;
        for (int j = 0; j < 2; ++j) yi += h * cfg.matrices.I(i, j) * step.gamma_block(j);
        CHECK((step.stages[i] - yi).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("linear stability through actual steps has modulus one on the imaginary axis")
{
    // y' = i x y as the equivalent 2x2 real rotation; a symmetric method keeps
    // |y1/y0| = 1 exactly up to the solver tolerance
    for (double x : {0.1, 0.5, 1.0}) {
        Mat A(2, 2);
        A << 0.0, -x, x, 0.0;
        limint::ProblemDefinition rot;
        rot.dim = 2;
        rot.f = [A](const Vec& y) { return Vec(A * y); };
        rot.jacobian = [A](const Vec&) { return A; };
        Vec y0(2);
        y0 << 1.0, 0.0;
        for (auto [k, s] : std::vector<std::pair<int, int>>{{2, 2}, {6, 2}, {4, 3}}) {
            const auto step = hbvm_step(make_hbvm_config(k, s), rot, y0, 1.0, tight());
            REQUIRE(step.converged);
            CHECK(step.y1.norm() == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("gamma formulation equals the Runge-Kutta formulation")
{
    const auto st = tight();
    const auto kp = limint::kepler(0.6);
    const auto lv = limint::lotka_volterra(-2.0, -1.0, -0.5, 1.0, 2.0);
    const auto ph = limint::poly_hamiltonian(1.0, 10.0, 4);
    Vec ph_y0(2);
    ph_y0 << 1.0, -1.0;

    struct Case {
        const limint::ProblemDefinition* problem;
        Vec y0;
        double h;
    };
    const std::vector<Case> cases = {{&kp.system.problem, kp.y0, 0.01},
                                     {&lv.system.problem, lv.y0, 0.01},
                                     {&ph.system.problem, ph_y0, 1e-3}};
    for (const auto& c : cases) {
        for (auto [k, s] : std::vector<std::pair<int, int>>{{2, 2}, {6, 3}}) {
            const auto gamma_route = hbvm_step(make_hbvm_config(k, s), *c.problem, c.y0, c.h, st);
            const auto rk_route = rk_step(limint::hbvm_tableau(k, s), *c.problem, c.y0, c.h, st);
            REQUIRE(gamma_route.converged);
            REQUIRE(rk_route.converged);
            CHECK((gamma_route.y1 - rk_route.y1).cwiseAbs().maxCoeff() <= 1e-11);
            for (int i = 0; i < k; ++i)
                CHECK((gamma_route.stages[i] - rk_route.stages[i]).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }
}

TEST_CASE("trapezoidal rk_step solves the implicit trapezoidal rule")
{
    Mat A(1, 1);
    A << -2.0;
    limint::ProblemDefinition lin;
    lin.dim = 1;
    lin.f = [A](const Vec& y) { return Vec(A * y); };
    lin.jacobian = [A](const Vec&) { return A; };
    Vec y0(1);
    y0 << 1.0;
    const double h = 0.1, q = -0.2;
    const auto step = rk_step(limint::trapezoidal_tableau(2), lin, y0, h, tight());
    REQUIRE(step.converged);
    CHECK(step.y1[0] == Catch::Approx((1.0 + q / 2) / (1.0 - q / 2)).margin(1e-13));
}

TEST_CASE("LIM with r = 0 is bit-for-bit the HBVM step")
{
    const auto kp = limint::kepler(0.6);
    const double h = 0.01 * std::acos(-1.0);
    for (auto [k, s] : std::vector<std::pair<int, int>>{{2, 2}, {8, 2}}) {
        const auto hb = hbvm_step(make_hbvm_config(k, s), kp.system.problem, kp.y0, h, tight());
        const auto lm =
            lim_step(make_lim_config(0, k, s), kp.system.problem, kp.invariants, kp.y0, h, tight());
        REQUIRE(hb.converged);
        REQUIRE(lm.converged);
        CHECK((hb.y1 - lm.y1).cwiseAbs().maxCoeff() == 0.0);
        CHECK((hb.gamma_hat - lm.gamma_hat).cwiseAbs().maxCoeff() == 0.0);
        CHECK(lm.alpha.size() == 0);
        CHECK(lm.phi_hat.empty());
    }
}

TEST_CASE("LIM(8,2,2) conserves all Kepler invariants in one step")
{
    const auto kp = limint::kepler(0.6);
    const double h = 0.01 * std::acos(-1.0);
    const auto cfg = make_lim_config(8, 2, 2);
    const auto step = lim_step(cfg, kp.system.problem, kp.invariants, kp.y0, h, tight());
    REQUIRE(step.converged);

    const Vec L0 = kp.invariants.L(kp.y0);
    const Vec L1 = kp.invariants.L(step.y1);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(L1[i] - L0[i]) <= 1e-11 * (1.0 + std::abs(L0[i])));

    // y1 = y0 + h gamma_0 - h phi_0 alpha
    const Vec reconstructed = kp.y0 + h * step.gamma_block(0) - h * (step.phi_hat[0] * step.alpha);
    CHECK((step.y1 - reconstructed).norm() <= 1e-13 * (1.0 + step.y1.norm()));
}

TEST_CASE("LIM(r,s,s) satisfies the perturbed collocation conditions")
{
    // with k = s the gamma quadrature is interpolatory, so the polynomial
    // obeys u'(c_i h) = f(u(c_i h)) - phi_0 alpha at every abscissa
    const auto kp = limint::kepler(0.6);
    const double h = 0.02;
    const auto cfg = make_lim_config(8, 2, 2);
    const auto step = lim_step(cfg, kp.system.problem, kp.invariants, kp.y0, h, tight());
    REQUIRE(step.converged);

    for (int i = 0; i < 2; ++i) {
        Vec du = Vec::Zero(4);  // sum_j gamma_j P_j(c_i), the u' expansion without the correction
        for (int j = 0; j < 2; ++j)
            du += limint::legendre_eval(j, cfg.matrices.rule.nodes[i]) * step.gamma_block(j);
        CHECK((du - kp.system.problem.f(step.stages[i])).cwiseAbs().maxCoeff() <= 1e-11);
    }
}

TEST_CASE("enforce_mask restricts the correction to selected invariants")
{
    const auto lv = limint::lotka_volterra(-2.0, -1.0, -0.5, 1.0, 2.0);
    InvariantSet only_H = lv.invariants;
    only_H.enforce_mask = {true, false};
    const double h = lv.period / 30.0;
    const auto cfg = make_lim_config(8, 2, 2);
    const auto step = lim_step(cfg, lv.system.problem, only_H, lv.y0, h, tight());
    REQUIRE(step.converged);
    CHECK(step.alpha.size() == 1);
    CHECK(step.phi_hat[0].cols() == 1);

    const Vec L0 = lv.invariants.L(lv.y0);
    const Vec L1 = lv.invariants.L(step.y1);
    const double dH = std::abs(L1[0] - L0[0]);
    const double dC = std::abs(L1[1] - L0[1]);
    CHECK(dH <= 1e-12 * (1.0 + std::abs(L0[0])));
    CHECK(dC > 100.0 * dH);  // the Casimir is only monitored, not enforced
}

TEST_CASE("quadratic invariants are conserved exactly once 2r/s >= 2")
{
    const auto kp = limint::kepler(0.6);
    const double h = 0.05;
    const auto cfg = make_lim_config(2, 8, 2);  // 2r/s = 2: quadratic L exact, H only O(h^5)
    const auto step = lim_step(cfg, kp.system.problem, kp.invariants, kp.y0, h, tight());
    REQUIRE(step.converged);
    const Vec L0 = kp.invariants.L(kp.y0);
    const Vec L1 = kp.invariants.L(step.y1);
    CHECK(std::abs(L1[1] - L0[1]) <= 1e-12);          // angular momentum, degree 2
    CHECK(std::abs(L1[0] - L0[0]) > 1e-10);           // Hamiltonian defect is genuine at this h
}

TEST_CASE("non-polynomial invariant defect scales as h^(2r+1)")
{
    const auto kp = limint::kepler(0.6);
    InvariantSet only_H = kp.invariants;
    only_H.enforce_mask = {true, false, false};
    for (int r : {2, 3}) {
        const auto cfg = make_lim_config(r, 8, 2);
        std::vector<double> hs, defects;
        for (double h : {0.24, 0.12, 0.06}) {
            const auto step = lim_step(cfg, kp.system.problem, only_H, kp.y0, h, tight());
            REQUIRE(step.converged);
            hs.push_back(h);
            defects.push_back(std::abs(kp.system.H(step.y1) - kp.system.H(kp.y0)));
        }
        CHECK(limint::loglog_slope(hs, defects) >= 2 * r + 0.5);
    }
}

TEST_CASE("HBVM energy conservation threshold on polynomial Hamiltonians")
{
    // degree 4 Hamiltonian: HBVM(2,1) sits exactly at 2k/s = 4 and conserves;
    // HBVM(2,2) has threshold 2 and only carries an O(h^{2k+1}) defect
    const auto ph = limint::poly_hamiltonian(0.5, 1.0, 2);
    Vec y0(2);
    y0 << 0.8, -0.3;
    const double H0 = ph.system.H(y0);

    const auto conserving = hbvm_step(make_hbvm_config(2, 1), ph.system.problem, y0, 0.1, tight());
    REQUIRE(conserving.converged);
    CHECK(std::abs(ph.system.H(conserving.y1) - H0) <= 1e-11 * (1.0 + std::abs(H0)));

    std::vector<double> hs, defects;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto step = hbvm_step(make_hbvm_config(2, 2), ph.system.problem, y0, h, tight());
        REQUIRE(step.converged);
        hs.push_back(h);
        defects.push_back(std::abs(ph.system.H(step.y1) - H0));
    }
    CHECK(defects[1] > 1e-11);                       // genuinely not conserved
    CHECK(limint::loglog_slope(hs, defects) >= 4.5);  // 2k + 1 = 5
}

TEST_CASE("gamma coefficients scale like h^j")
{
    const auto kp = limint::kepler(0.6);
    const auto cfg = make_hbvm_config(6, 4);
    const auto coarse = hbvm_step(cfg, kp.system.problem, kp.y0, 0.2, tight());
    const auto fine = hbvm_step(cfg, kp.system.problem, kp.y0, 0.1, tight());
    REQUIRE(coarse.converged);
    REQUIRE(fine.converged);
    for (int j = 0; j < 4; ++j) {
        const double slope = std::log2(coarse.gamma_block(j).norm() / fine.gamma_block(j).norm());
        CHECK(slope >= j - 0.5);
    }
}

TEST_CASE("solve_alpha basics")
{
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const int m = 6, nu = 3, s = 2;

    std::vector<Mat> phi(s, Mat(m, nu));
    for (auto& block : phi)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < nu; ++j) block(i, j) = d(rng);

    // zero right-hand side
    CHECK(solve_alpha(phi, Vec::Zero(s * m)).cwiseAbs().maxCoeff() == 0.0);

    // random consistent system against an independent dense factorization
    Vec gamma(s * m);
    for (int i = 0; i < s * m; ++i) gamma[i] = d(rng);
    const Vec alpha = solve_alpha(phi, gamma);
    const Mat M0 = phi[0].transpose() * phi[0];
    Vec rhs = Vec::Zero(nu);
    for (int j = 0; j < s; ++j) rhs += phi[j].transpose() * gamma.segment(j * m, m);
    const Vec oracle = M0.colPivHouseholderQr().solve(rhs);
    CHECK((alpha - oracle).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + oracle.cwiseAbs().maxCoeff()));

    // scalar reduction for a single invariant
    std::vector<Mat> phi1(s, Mat(m, 1));
    for (auto& block : phi1)
        for (int i = 0; i < m; ++i) block(i, 0) = d(rng);
    const Vec a1 = solve_alpha(phi1, gamma);
    double num = 0.0;
    for (int j = 0; j < s; ++j) num += phi1[j].col(0).dot(gamma.segment(j * m, m));
    CHECK(a1[0] == Catch::Approx(num / phi1[0].col(0).squaredNorm()).epsilon(1e-13));

    // a rank-deficient Gram matrix is a degeneracy
    std::vector<Mat> bad(s, Mat(m, 2));
    for (auto& block : bad) {
        for (int i = 0; i < m; ++i) block(i, 0) = d(rng);
        block.col(1) = 2.0 * block.col(0);
    }
    CHECK_THROWS_AS(solve_alpha(bad, gamma), limint::degeneracy_error);
}

TEST_CASE("lim_step detects dependent enforced invariants")
{
    const auto kp = limint::kepler(0.6);
    InvariantSet duplicated = kp.invariants;
    duplicated.nu = 2;
    duplicated.names = {"H", "H2"};
    duplicated.enforce_mask = {true, true};
    {
        auto L = kp.invariants.L;
        duplicated.L = [L](const Vec& y) {
            Vec v(2);
            v[0] = L(y)[0];
            v[1] = L(y)[0];
            return v;
        };
        auto G = kp.invariants.grad_L;
        duplicated.grad_L = [G](const Vec& y) {
            Mat out(4, 2);
            out.col(0) = G(y).col(0);
            out.col(1) = G(y).col(0);
            return out;
        };
    }
    const auto cfg = make_lim_config(4, 4, 2);
    CHECK_THROWS_AS(lim_step(cfg, kp.system.problem, duplicated, kp.y0, 0.01, tight()),
                    limint::degeneracy_error);
}

TEST_CASE("alpha magnitude scales like h^(2s)")
{
    const auto st = tight();
    const std::vector<double> h_list = {0.1, 0.05, 0.025, 0.0125};

    const auto kp = limint::kepler(0.6);
    const auto probe_k = limint::alpha_scaling_probe(make_lim_config(4, 4, 2), kp.system.problem,
                                                     kp.invariants, kp.y0, h_list, st);
    CHECK_FALSE(probe_k.saturated);
    CHECK(probe_k.slope >= 3.5);

    const auto lv = limint::lotka_volterra(-2.0, -1.0, -0.5, 1.0, 2.0);
    const auto probe_l = limint::alpha_scaling_probe(make_lim_config(4, 4, 2), lv.system.problem,
                                                     lv.invariants, lv.y0, h_list, st);
    CHECK_FALSE(probe_l.saturated);
    CHECK(probe_l.slope >= 3.5);

    CHECK_THROWS_AS(limint::alpha_scaling_probe(make_lim_config(0, 4, 2), kp.system.problem,
                                                kp.invariants, kp.y0, h_list, st),
                    std::invalid_argument);

    // multipliers below the floor report saturation rather than a slope
    const auto saturated = limint::alpha_scaling_probe(make_lim_config(4, 4, 2), kp.system.problem,
                                                       kp.invariants, kp.y0, {2e-4, 1e-4}, st);
    CHECK(saturated.saturated);
}

TEST_CASE("non-convergence is flagged, never silent")
{
    const auto kp = limint::kepler(0.6);
    SolverSettings starved;
    starved.tol = 1e-14;
    starved.max_outer = 2;  // not enough sweeps at this stepsize
    const auto step = lim_step(make_lim_config(4, 4, 2), kp.system.problem, kp.invariants, kp.y0,
                               0.3, starved);
    CHECK_FALSE(step.converged);
    CHECK(step.iterations == 2);
    CHECK(step.y1.allFinite());           // last iterate is still reported
    CHECK(step.solver_residual > 1e-14);  // with an honest residual
}

TEST_CASE("workspace reuse across steps does not change the solution")
{
    const auto kp = limint::kepler(0.6);
    const auto st = tight();
    const auto cfg = make_hbvm_config(4, 2);
    limint::SolverWorkspace ws;
    Vec with_ws = kp.y0, without_ws = kp.y0;
    for (int n = 0; n < 20; ++n) {
        with_ws = hbvm_step(cfg, kp.system.problem, with_ws, 0.05, st, &ws).y1;
        without_ws = hbvm_step(cfg, kp.system.problem, without_ws, 0.05, st, nullptr).y1;
    }
    CHECK((with_ws - without_ws).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lim config validation")
{
    CHECK_THROWS_AS(make_lim_config(1, 4, 2), std::invalid_argument);  // 0 < r < s
    CHECK_THROWS_AS(make_lim_config(4, 1, 2), std::invalid_argument);  // k < s
    CHECK_NOTHROW(make_lim_config(0, 4, 2));
    CHECK_NOTHROW(make_lim_config(2, 2, 2));
}
