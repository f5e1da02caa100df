#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plap/constants.hpp"
#include "plap/grid.hpp"
#include "plap/plap_solver.hpp"
#include "plap/problem.hpp"
#include "plap/spectral.hpp"

namespace plap {

/// F^u(x, ξ) = coeff(x) ξ^{q-1} + base(x) for a frozen field u, where
///   coeff = λ ω₁,
///   base  = λ (h(x,u) - ω₁ u^{q-1}) + β f(x, u, |∇u|).
struct FrozenNonlinearity {
    ScalarField base;
    ScalarField coeff;
    double q = 1.5;

    /// Negative ξ is treated as 0.
    double at(std::size_t node, double xi) const;
    ScalarField evaluate(const ScalarField& xi) const;
};

/// ε = min{ (λ/λ₁)^{1/(p-q)}, M λ₁^{-1/(p-1)} / ‖φ‖∞ }. Throws ConfigError on nonpositive input.
double make_epsilon(double lambda, double lambda1, double M, double phi_sup, double p, double q);

/// λ h(x,u) + β f(x,u,|∇u|) at every node (0 on the boundary); negative u is clamped to 0.
ScalarField source_term(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec);

/// Base values in [-1e-12, 0) are clamped to 0; anything below throws
/// HypothesisViolation naming the node and the offending values.
FrozenNonlinearity freeze_nonlinearity(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec,
                                       const WeightFields& weights);
FrozenNonlinearity freeze_nonlinearity(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec,
                                       const Grid& grid);

enum class StartFrom { super, sub };

struct InnerOptions {
    SolveOptions solve{};
    int max_iter = 2000;
    double stop_rel = 1e-8;  // stop when ‖U^{n+1} - U^n‖∞ < stop_rel ‖super‖∞
};

struct InnerResult {
    ScalarField U;
    int iterations = 0;
    std::vector<double> changes;  // ‖U^{n+1} - U^n‖∞ per sweep
    double slack = 0.0;           // monotonicity slack used for the trap checks
};

/// Monotone iteration U^{n+1} = solve(F(·, U^n)) started from `super`
/// (nonincreasing) or from `sub` (nondecreasing). Every iterate must stay in
/// [sub - slack, super + slack] and move in the expected direction up to the
/// slack 10 tol max(1, 1/(p-1)) ‖super‖∞, else InvariantViolation.
/// `guard`, when given, checks the gradient estimate after every solve.
InnerResult inner_monotone_solve(const FrozenNonlinearity& F, const ScalarField& sub, const ScalarField& super,
                                 double p, const InnerOptions& opts = {}, StartFrom start = StartFrom::super,
                                 const GradientGuard* guard = nullptr);

enum class BarrierKind { sub, super };

struct BarrierReport {
    bool ok = true;
    double worst = 0.0;  // most negative (super) or most positive (sub) value of (-Δ_p c) - F(c)
    std::size_t node = 0;
    double tolerance = 0.0;
};

/// Computes d = (-Δ_p c) - F(·, c) at interior nodes. A super-solution needs
/// d >= -tol, a sub-solution d <= tol, with tol = tol_rel times the larger of
/// ‖-Δ_p c‖∞ and ‖F(c)‖∞.
BarrierReport verify_subsuper(const ScalarField& candidate, const FrozenNonlinearity& F, double p, BarrierKind kind,
                              double tol_rel = 1e-6);

struct PiconeResult {
    double gap = 0.0;            // ∫ (F(U)/U^{p-1} - F(V)/V^{p-1}) (U^p - V^p)
    double scale = 0.0;          // ∫ F(U) U, the magnitude the gap is compared against
    double max_integrand = 0.0;  // largest nodal integrand value (should be <= 0)
};

/// Throws ConfigError when U or V is not positive at an interior node.
PiconeResult picone_diagnostic(const ScalarField& U, const ScalarField& V, const FrozenNonlinearity& F, double p);

struct BoundCertificates {
    bool lower_ok = false;
    bool upper_ok = false;
    bool gradient_ok = false;
    double lower_excess = 0.0;     // max(εu₁ - u)
    double upper_excess = 0.0;     // max(u - Mφ/‖φ‖∞)
    double gradient_sup = 0.0;     // ‖∇u‖∞
    double gradient_bound = 0.0;   // γ M
};

/// εu₁ <= u <= (M/‖φ‖∞) φ and ‖∇u‖∞ <= γM, each with slack 1e-6 M.
BoundCertificates verify_solution_bounds(const ScalarField& u, double epsilon, const ScalarField& u1, double M,
                                         const ScalarField& phi, double phi_sup, double gamma);

struct OuterOptions {
    InnerOptions inner{};
    int max_outer = 100;
    double stop_rel = 1e-7;      // C¹ distance threshold relative to M
    double residual_rel = 1e-5;  // certified PDE residual relative to its natural scale
};

struct Certificates {
    bool lower_bound_ok = false;
    bool upper_bound_ok = false;
    bool gradient_bound_ok = false;
    double pde_residual = 0.0;
    double residual_scale = 0.0;  // λ‖ω‖∞ M^{q-1} + β‖ω‖∞ γ^b M^{a+b}
    double picone_gap = 0.0;
    double picone_scale = 0.0;
    double picone_max_integrand = 0.0;
    double two_sided_gap = 0.0;  // ‖U_from_super - U_from_sub‖∞ for the last frozen problem
};

enum class SolveStatus { converged, inconclusive };

struct SolveReport {
    SolveStatus status = SolveStatus::inconclusive;
    bool converged = false;
    ScalarField solution;
    int outer_iters = 0;
    std::vector<double> outer_trace;  // ‖u_{k+1}-u_k‖∞ + ‖∇u_{k+1}-∇u_k‖∞
    std::vector<int> inner_iters;
    Certificates certificates;
    double epsilon = 0.0;
    double M = 0.0;
    double lambda = 0.0;
    double beta = 0.0;
    RegionVerdict verdict;
    std::string note;  // why a run is inconclusive
};

/// Shared, (λ, β)-independent inputs of the pipeline.
struct PipelineContext {
    ProblemSpec spec;
    Grid grid;
    ConstantsComputation constants;
    EigenPair eigen;

    /// Runs compute_constants and first_eigenpair.
    static PipelineContext prepare(const ProblemSpec& spec, const SolveOptions& opts = {});
};

/// Picard iteration u_{k+1} = T(u_k) from u_0 = εu₁, where T(u) solves the
/// problem frozen at u by monotone iteration between εu₁ and (M/‖φ‖∞)φ.
/// Each iterate must stay in the invariant set (bounds plus ‖∇u‖∞ <= γM);
/// leaving it throws InvariantViolation. Throws OutOfRegion before any solve
/// when (λ, β) is not admissible. Hitting max_outer yields an inconclusive report.
SolveReport outer_fixed_point(const PipelineContext& ctx, double lambda, double beta, const OuterOptions& opts = {});

}  // namespace plap
