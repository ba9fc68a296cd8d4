// Sweeps HBVM(k,2) over k for the degree-8 polynomial Hamiltonian and
// prints the maximum relative energy error after 1000 steps: the error
// collapses to roundoff exactly when the quadrature reaches degree 2k/s.

#include <cstdio>

#include "limint/limint.hpp"

int main()
{
    const auto ph = limint::poly_hamiltonian(1.0, 10.0, 4);
    limint::Vec y0(2);
    y0 << 1.0, -1.0;
    const double H0 = std::abs(ph.system.H(y0));

    limint::SolverSettings solver;
    solver.tol = 1e-14;

    std::printf("HBVM(k,2) on H of degree 8, h = 1e-3, 1000 steps\n");
    std::printf("%-4s %-16s %s\n", "k", "max|dH|/|H0|", "conserving (2k/s >= 8)?");
    for (int k = 2; k <= 8; ++k) {
        const auto run = limint::integrate_fixed(limint::make_hbvm_method(k, 2), ph.system.problem,
                                                 &ph.invariants, y0, 1e-3, 1000, 10, solver);
        if (run.failed) {
            std::printf("k=%d failed: %s\n", k, run.failure.c_str());
            return 1;
        }
        double worst = 0.0;
        for (const auto& row : run.invariant_errors) worst = std::max(worst, std::abs(row[0]));
        std::printf("%-4d %-16.3e %s\n", k, worst / H0, k >= 8 ? "yes" : "no");
    }
    return 0;
}
