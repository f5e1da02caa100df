#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"

namespace plap {

struct SolveOptions {
    /// Stop when the sup-norm residual of -Δ_p u = g is at most tol_residual * max(1, ‖g‖∞).
    double tol_residual = 1e-8;
    /// Newton (or fallback Picard) steps allowed per continuation stage.
    int max_iter = 500;
    /// First trial step length of the backtracking line search, in (0, 1].
    double damping = 1.0;
    /// Ramp p from 2 to the target in steps of 0.25 when p >= 2.5 or p <= 1.6.
    bool continuation = true;

    void check() const;
};

/// Outcome of one Dirichlet solve, with its Newton/Picard trace.
struct PoissonSolution {
    ScalarField u;
    double residual = 0.0;  // final sup-norm residual
    std::vector<IterationRecord> trace;
};

/// Solves -Δ_p u = g with u = 0 on the boundary.
///
/// Damped Newton on the discrete flux-form system with an analytic Jacobian,
/// optionally preceded by p-continuation. When the line search cannot reduce
/// the residual, a frozen-coefficient (Picard) step is taken instead.
/// `initial_guess`, when given, is tried first at the target p.
///
/// Throws SolverError carrying the residual history on non-convergence.
PoissonSolution solve_plap_dirichlet_traced(const Grid& grid, double p, const ScalarField& g,
                                            const SolveOptions& opts = {},
                                            const ScalarField* initial_guess = nullptr);

ScalarField solve_plap_dirichlet(const Grid& grid, double p, const ScalarField& g, const SolveOptions& opts = {},
                                 const ScalarField* initial_guess = nullptr);

/// True iff u1 <= u2 + slack at every node. Throws GridMismatch.
bool check_comparison(const ScalarField& u1, const ScalarField& u2, double slack);

/// Regularization the solver uses for a right-hand side g: 1e-8 times the
/// natural gradient scale (‖g‖∞ · diam)^{1/(p-1)}.
double solver_regularization(const Grid& grid, double p, double g_sup);

/// Labelled right-hand side used to probe the gradient constant.
struct Probe {
    std::string name;
    ScalarField g;
};

struct GradConstantEstimate {
    double khat = 0.0;  // safety_factor * max ratio
    double max_ratio = 0.0;
    std::size_t probe_count = 0;
    std::string worst_probe;
};

inline constexpr double grad_constant_safety = 1.1;

/// g ≡ 1, three seeded ±1 checkerboards and an interior bump.
/// Callers add the problem weights.
std::vector<Probe> default_probes(const Grid& grid);

/// khat = 1.1 * max over probes of ‖∇u_g‖∞ / ‖g‖∞^{1/(p-1)}.
///
/// Throws ConfigError on an empty list or an all-zero probe; SolverError
/// naming the probe when a solve fails.
GradConstantEstimate estimate_grad_constant(const Grid& grid, double p, const std::vector<Probe>& probes,
                                            const SolveOptions& opts = {});

/// Runtime check of ‖∇u‖∞ <= khat ‖g‖∞^{1/(p-1)} for a solution u of -Δ_p u = g.
///
/// A violation means khat under-estimates the true constant; it increments
/// the process-wide counter and throws InvariantViolation.
class GradientGuard {
public:
    GradientGuard(double khat, double p) : khat_(khat), p_(p) {}

    void check(const ScalarField& u, double g_sup, std::string_view context) const;

    double khat() const noexcept { return khat_; }

    static std::size_t checks() noexcept;
    static std::size_t violations() noexcept;

private:
    double khat_;
    double p_;
};

}  // namespace plap
