#pragma once

#include "plap/grid.hpp"
#include "plap/plap_solver.hpp"

namespace plap {

/// Solution of -Δ_p φ = w with zero boundary data, and its maximum.
struct TorsionResult {
    ScalarField phi;
    double phi_sup = 0.0;
};

/// Requires w >= 0 and w not identically zero (ConfigError otherwise).
TorsionResult torsion_function(const Grid& grid, double p, const ScalarField& w, const SolveOptions& opts = {});

/// First eigenpair of -Δ_p u = λ ω₁ |u|^{p-2} u, u = 0 on the boundary,
/// normalised so that ‖u₁‖∞ = 1 and u₁ > 0 inside.
struct EigenPair {
    double lambda1 = 0.0;
    ScalarField u1;
    /// ∫|∇u₁|^p / ∫ω₁ u₁^p with stencil gradients and trapezoidal quadrature.
    /// Agrees with lambda1 up to discretisation error; reported as a cross-check.
    double rayleigh = 0.0;
    int iterations = 0;
    /// ‖(-Δ_p u₁) - λ₁ ω₁ u₁^{p-1}‖∞ over interior nodes.
    double residual = 0.0;
};

struct EigenOptions {
    int max_iter = 500;
    double lambda_tol = 1e-8;  // relative change of λ between sweeps
    double field_tol = 1e-8;   // sup-norm change of the normalised field
};

/// Inverse power iteration: u ← solve(ω₁ u^{p-1}), renormalised to sup-norm 1,
/// started from the torsion function of ω₁. λ₁ is read off the normalisation
/// constant, which makes it the exact eigenvalue of the discrete operator.
///
/// Throws ConfigError for a negative or vanishing weight and SolverError on
/// non-convergence.
EigenPair first_eigenpair(const Grid& grid, double p, const ScalarField& omega1, const SolveOptions& opts = {},
                          const EigenOptions& eig = {});

}  // namespace plap
