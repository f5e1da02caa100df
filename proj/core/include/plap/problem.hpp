#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plap/expr.hpp"
#include "plap/grid.hpp"

namespace plap {

/// Exponents, weights and nonlinearities of
///   -Δ_p u = λ h(x,u) + β f(x,u,∇u) in Ω,  u = 0 on ∂Ω.
///
/// h may use x1, x2, u; f may additionally use gnorm (= |∇u|); weights use
/// only x1, x2. All expressions may read the exponents p, q, a, b, r.
struct ProblemSpec {
    double p = 2.0;
    double q = 1.5;
    double a = 1.0;
    double b = 1.0;

    Expression omega1 = parse("1");
    Expression omega2 = parse("1");
    Expression omega3 = parse("1");
    Expression h = parse("u^(q-1)");
    Expression f = parse("u^a * gnorm^b");

    std::vector<Interval> domain{Interval{0.0, 1.0}};
    std::vector<int> resolution{129};

    /// r = a + b + 1, always recomputed.
    double r() const noexcept { return a + b + 1.0; }

    /// Throws ConfigError unless 1 < q < p, a > 0, b > 0, and each expression
    /// only reads the variables its role allows.
    void check() const;

    Grid make_grid() const;

    /// Bindings with p, q, a, b, r filled in.
    Bindings parameter_bindings() const;
};

/// The three weights and their pointwise maximum sampled on a grid.
struct WeightFields {
    ScalarField omega1;
    ScalarField omega2;
    ScalarField omega3;
    ScalarField omega;  // max of the three
};

/// Throws EvalError (with the node position) when a weight fails to evaluate.
WeightFields sample_weights(const ProblemSpec& spec, const Grid& grid);

struct HypothesisViolationRecord {
    std::string check;       // which inequality failed
    double magnitude = 0.0;  // how far past the bound
    std::array<double, 2> x{};
    double u = 0.0;
    double v = 0.0;
};

/// Outcome of sampled checking of the sandwich bounds on h and f.
struct HypothesisReport {
    bool pass = true;
    std::size_t checks = 0;
    std::optional<HypothesisViolationRecord> worst;

    std::string summary() const;
};

/// Checks at every node and sample: ω_i(x) ≥ 0; ω_1 u^{q-1} ≤ h(x,u) ≤ ω_2 u^{q-1};
/// 0 ≤ f(x,u,v) ≤ ω_3 u^a v^b. Also fails if ω_1 vanishes on every node.
/// Comparisons carry a 1e-12 relative slack for round-off.
///
/// Sampling can only falsify the hypotheses; a pass is not a proof.
HypothesisReport validate_hypotheses(const ProblemSpec& spec, const Grid& grid, std::span<const double> u_samples,
                                     std::span<const double> v_samples);

/// 32 log-spaced u samples in [1e-3, u_max] and 32 linear v samples in [0, v_max].
std::vector<double> default_u_samples(double u_max, std::size_t count = 32);
std::vector<double> default_v_samples(double v_max, std::size_t count = 32);

/// Parses the key = value problem file format (see docs/problem-file-format.md).
/// Throws ParseError with file positions, ConfigError on invalid values.
ProblemSpec parse_problem(std::string_view text);
ProblemSpec load_problem(const std::filesystem::path& path);

/// Canonical text of a problem; parse_problem(to_problem_text(s)) reproduces s.
std::string to_problem_text(const ProblemSpec& spec);

}  // namespace plap
