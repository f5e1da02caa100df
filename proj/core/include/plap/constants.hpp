#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "plap/grid.hpp"
#include "plap/plap_solver.hpp"
#include "plap/problem.hpp"
#include "plap/spectral.hpp"

namespace plap {

/// Exponents that enter the closed-form region formulas.
struct Exponents {
    double p = 2.0;
    double q = 1.5;
    double r = 3.0;  // a + b + 1
    double b = 1.0;

    static Exponents of(const ProblemSpec& spec) noexcept { return {spec.p, spec.q, spec.r(), spec.b}; }
};

/// Constants of the existence construction, all strictly positive.
struct ConstantsBundle {
    double phi_sup = 0.0;    // ‖φ‖∞, φ solving -Δ_p φ = ω
    double khat = 0.0;       // empirical gradient constant
    double omega_sup = 0.0;  // ‖ω‖∞, ω = max(ω₁, ω₂, ω₃)
    double gamma = 0.0;      // khat ‖ω‖∞^{1/(p-1)} / ‖φ‖∞
    double A = 0.0;          // ‖φ‖∞^{p-1}
    double B = 0.0;          // khat^b ‖φ‖∞^{p-1-b} ‖ω‖∞^{b/(p-1)}
    double L = 0.0;          // ‖φ₁‖∞, φ₁ solving -Δ_p φ₁ = 1

    /// Builds gamma, A and B from the four measured quantities. Throws ConfigError unless all four are positive.
    static ConstantsBundle assemble(double phi_sup, double khat, double omega_sup, double L, const Exponents& e);

    /// True iff gamma, A, B match a fresh recomputation to `rel` and every field is positive.
    bool consistent(const Exponents& e, double rel = 1e-12) const;
};

/// Everything compute_constants produces, including the fields the later stages reuse.
struct ConstantsComputation {
    ConstantsBundle bundle;
    WeightFields weights;
    TorsionResult torsion;       // weight ω
    TorsionResult unit_torsion;  // weight 1
    GradConstantEstimate grad;
};

/// Samples ω, solves both torsion problems, probes the gradient constant
/// (default probes plus each weight that is not identically zero) and
/// assembles the bundle. Failures are rethrown with the failing stage named.
ConstantsComputation compute_constants(const ProblemSpec& spec, const Grid& grid, const SolveOptions& opts = {});

enum class RegionCase { super, critical, sub };

std::string_view case_name(RegionCase c) noexcept;

/// r > p is SUPER, r < p is SUB; |r - p| <= 1e-12 max(1, p) counts as CRITICAL.
RegionCase classify_case(const Exponents& e) noexcept;

/// Φ(t) = λ A t^{q-p} + β B t^{r-p}. Throws ConfigError for t <= 0.
double phi_big(double t, double lambda, double beta, const ConstantsBundle& c, const Exponents& e);

/// K = ((r-p)/A)^{r-p} ((p-q)/B)^{p-q} / (r-q)^{r-q}; meaningful when r > p.
double region_constant_K(const ConstantsBundle& c, const Exponents& e);

/// A level M > 0 with Φ(M) <= 1, or nothing when (λ, β) lies outside the region.
///   SUPER:    the unique critical point of Φ, kept iff Φ(M) <= 1 + 1e-10.
///   CRITICAL: (λA / (1 - βB))^{1/(p-q)}, iff βB < 1.
///   SUB:      the root of Φ(M) = 1 by bisection.
std::optional<double> compute_M(double lambda, double beta, const ConstantsBundle& c, const Exponents& e);

struct RegionVerdict {
    RegionCase case_tag = RegionCase::sub;
    bool in_region = false;
    std::optional<double> K;  // SUPER only
    std::optional<double> M;  // in-region only
    /// Raw slack of the defining inequality; +infinity in the SUB case.
    double margin = 0.0;
};

/// Throws ConfigError unless λ, β > 0.
RegionVerdict region_classify(double lambda, double beta, const ConstantsBundle& c, const Exponents& e);

/// Upper boundary β(λ) of the region for each λ. SUPER: (K / λ^{r-p})^{1/(p-q)};
/// CRITICAL: the largest double below 1/B (the bound itself is excluded);
/// SUB: empty. Every returned pair classifies as in-region.
std::vector<std::pair<double, double>> region_boundary(const std::vector<double>& lambdas, const ConstantsBundle& c,
                                                       const Exponents& e);

}  // namespace plap
