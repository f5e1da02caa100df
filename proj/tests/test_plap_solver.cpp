#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "plap/errors.hpp"
#include "plap/plap_solver.hpp"
#include "plap/spectral.hpp"
#include "test_support.hpp"

using namespace plap;
using testing::box;
using testing::line;

namespace {

constexpr double pi = std::numbers::pi;

double manufactured_error(int n) {
    const Grid g = line(0, 1, n);
    const auto rhs = ScalarField::sample(g, [](double x, double) { return pi * pi * std::sin(pi * x); });
    const auto u = solve_plap_dirichlet(g, 2.0, rhs);
    return sup_distance(u, ScalarField::sample(g, [](double x, double) { return std::sin(pi * x); }));
}

ScalarField random_field(const Grid& g, std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    ScalarField f(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) f[k] = U(rng);
    return f;
}

double max_ratio(const Grid& g, double p, const ScalarField& rhs) {
    const auto u = solve_plap_dirichlet(g, p, rhs);
    return sup_norm(gradient(u)) / std::pow(sup_norm(rhs), 1.0 / (p - 1.0));
}

}  // namespace

TEST_CASE("manufactured solution at p = 2") {
    CHECK(manufactured_error(129) <= 1e-3);

    SUBCASE("second-order convergence") {
        const double e1 = manufactured_error(33), e2 = manufactured_error(65), e3 = manufactured_error(129);
        CHECK(e1 / e2 >= 3.5);
        CHECK(e2 / e3 >= 3.5);
    }
    SUBCASE("2D") {
        const Grid g = box({0, 1}, {0, 1}, 33, 33);
        const auto rhs =
            ScalarField::sample(g, [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
        const auto u = solve_plap_dirichlet(g, 2.0, rhs);
        const auto want = ScalarField::sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
        CHECK(sup_distance(u, want) <= 2e-3);
    }
}

TEST_CASE("zero right-hand side gives zero") {
    for (double p : {1.3, 2.0, 3.5}) {
        const Grid g = line(0, 1, 33);
        const auto u = solve_plap_dirichlet(g, p, ScalarField(g));
        CHECK(sup_norm(u) == 0.0);
    }
}

TEST_CASE("1D torsion at p = 3") {
    const Grid g = line(0, 1, 257);
    const auto u = solve_plap_dirichlet(g, 3.0, ScalarField(g, 1.0));
    const auto want = ScalarField::sample(g, [](double x, double) { return oracle::torsion_1d(3.0, 1.0, x); });
    CHECK(sup_distance(u, want) <= 5e-3);
    CHECK(u.is_dirichlet_zero());
}

TEST_CASE("residual contract and trace") {
    std::mt19937 rng(17);
    for (double p : {1.5, 2.0, 2.7, 4.0}) {
        const Grid g = box({0, 1}, {0, 1.5}, 17, 21);
        const auto rhs = random_field(g, rng, 0.0, 3.0);
        const SolveOptions opts;
        const auto sol = solve_plap_dirichlet_traced(g, p, rhs, opts);
        const auto res = p_laplacian_apply(sol.u, p, solver_regularization(g, p, sup_norm(rhs))) - rhs;
        double worst = 0.0;
        for (auto k : g.interior_nodes()) worst = std::max(worst, std::abs(res[k]));
        CHECK(worst <= opts.tol_residual * std::max(1.0, sup_norm(rhs)) * (1 + 1e-9));
        CHECK(sol.residual <= opts.tol_residual * std::max(1.0, sup_norm(rhs)));
        REQUIRE_FALSE(sol.trace.empty());
        int newton_steps = 0;
        for (const auto& r : sol.trace) {
            CHECK(r.damping >= 0.0);
            CHECK(r.damping <= 1.0);
            newton_steps += r.damping > 0.0;
        }
        if (p != 2.0) CHECK(newton_steps > 0);
        CHECK(sol.trace.back().residual == sol.residual);
    }
}

TEST_CASE("non-convergence is reported with its history") {
    const Grid g = line(0, 1, 65);
    SolveOptions opts;
    opts.max_iter = 1;
    opts.continuation = false;
    opts.tol_residual = 1e-14;
    try {
        solve_plap_dirichlet(g, 4.0, ScalarField(g, 1.0), opts);
        FAIL("expected a solver failure");
    } catch (const SolverError& e) {
        CHECK_FALSE(e.history().empty());
    }
}

TEST_CASE("option validation") {
    const Grid g = line(0, 1, 9);
    SolveOptions bad;
    bad.tol_residual = 0;
    CHECK_THROWS_AS(solve_plap_dirichlet(g, 2.0, ScalarField(g, 1.0), bad), ConfigError);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(solve_plap_dirichlet(g, 2.0, ScalarField(g, 1.0), bad), ConfigError);
    bad = {};
    bad.damping = 1.5;
    CHECK_THROWS_AS(solve_plap_dirichlet(g, 2.0, ScalarField(g, 1.0), bad), ConfigError);
    CHECK_THROWS_AS(solve_plap_dirichlet(g, 1.0, ScalarField(g, 1.0)), ConfigError);
    CHECK_THROWS_AS(solve_plap_dirichlet(g, 2.0, ScalarField(line(0, 1, 10), 1.0)), GridMismatch);
}

TEST_CASE("homogeneity: solve(t g) = t^(1/(p-1)) solve(g)") {
    std::mt19937 rng(23);
    for (double p : {1.5, 2.0, 3.0}) {
        const Grid g = line(0, 1, 129);
        const auto rhs = random_field(g, rng, 0.2, 1.5);
        const auto u = solve_plap_dirichlet(g, p, rhs);
        for (double t : {0.1, 10.0}) {
            const auto ut = solve_plap_dirichlet(g, p, t * rhs);
            const double s = std::pow(t, 1.0 / (p - 1.0));
            CHECK(sup_distance(ut, s * u) <= 1e-6 * sup_norm(ut));
        }
    }
}

TEST_CASE("comparison principle") {
    SUBCASE("reflexive and slack semantics") {
        const Grid g = line(0, 1, 11);
        const auto u = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
        CHECK(check_comparison(u, u, 0.0));
        auto lower = u;
        const double h2 = g.spacing(0) * g.spacing(0);
        lower[5] -= h2;
        CHECK_FALSE(check_comparison(u, lower, 0.0));
        CHECK(check_comparison(u, lower, h2));
        CHECK_THROWS_AS(check_comparison(u, ScalarField(line(0, 1, 12)), 0.0), GridMismatch);
    }
    SUBCASE("g1 = 1 below g2 = 2 at p = 2") {
        const Grid g = line(0, 1, 65);
        const auto u1 = solve_plap_dirichlet(g, 2.0, ScalarField(g, 1.0));
        const auto u2 = solve_plap_dirichlet(g, 2.0, ScalarField(g, 2.0));
        CHECK(check_comparison(u1, u2, 1e-10));
    }
    SUBCASE("random ordered pairs") {
        std::mt19937 rng(29);
        const SolveOptions opts;
        for (int trial = 0; trial < 12; ++trial) {
            const double p = 1.4 + 0.25 * trial;
            const Grid g = trial % 3 == 0 ? box({0, 1}, {0, 1}, 13, 13) : line(0, 1, 65);
            const auto g1 = random_field(g, rng, 0.0, 1.0);
            auto g2 = g1;
            const auto bump = random_field(g, rng, 0.0, 0.5);
            g2 += bump;
            const auto u1 = solve_plap_dirichlet(g, p, g1, opts);
            const auto u2 = solve_plap_dirichlet(g, p, g2, opts);
            CHECK(check_comparison(u1, u2, 10 * opts.tol_residual));
        }
    }
}

TEST_CASE("boundedness by the unit torsion function") {
    std::mt19937 rng(31);
    const SolveOptions opts;
    for (double p : {1.5, 2.0, 3.0}) {
        const Grid g = line(0, 1, 97);
        const auto phi = torsion_function(g, p, ScalarField(g, 1.0)).phi;
        for (int trial = 0; trial < 4; ++trial) {
            const auto rhs = random_field(g, rng, -1.0, 1.0);
            const auto u = solve_plap_dirichlet(g, p, rhs, opts);
            CHECK(check_comparison(u, phi, 10 * opts.tol_residual));
            CHECK(check_comparison(-1.0 * u, phi, 10 * opts.tol_residual));
        }
    }
}

TEST_CASE("gradient constant estimation") {
    SUBCASE("p = 2, g = 1 gives ratio 1/2") {
        const Grid g = line(0, 1, 129);
        const auto est = estimate_grad_constant(g, 2.0, {{"constant", ScalarField(g, 1.0)}});
        CHECK(est.max_ratio == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(est.khat == doctest::Approx(0.55).epsilon(1e-6));
        CHECK(est.probe_count == 1);
        CHECK(est.worst_probe == "constant");
    }
    SUBCASE("1D ratio bounded by L^(1/(p-1))") {
        for (double L : {1.0, 2.0}) {
            for (double p : {1.5, 2.0, 3.0}) {
                const Grid g = line(0, L, 129);
                const auto probes = default_probes(g);
                CHECK(probes.size() == 5);
                for (const auto& pr : probes) CHECK(max_ratio(g, p, pr.g) <= std::pow(L, 1.0 / (p - 1.0)) * (1 + 1e-6));
                const auto est = estimate_grad_constant(g, p, probes);
                CHECK(est.max_ratio <= std::pow(L, 1.0 / (p - 1.0)) * (1 + 1e-6));
                CHECK(est.khat == doctest::Approx(grad_constant_safety * est.max_ratio));
            }
        }
    }
    SUBCASE("scaling a probe leaves its ratio unchanged") {
        const Grid g = line(0, 1, 129);
        const auto probes = default_probes(g);
        for (const auto& pr : probes)
            CHECK(max_ratio(g, 3.0, 16.0 * pr.g) == doctest::Approx(max_ratio(g, 3.0, pr.g)).epsilon(1e-6));
    }
    SUBCASE("bad probe lists") {
        const Grid g = line(0, 1, 17);
        CHECK_THROWS_AS(estimate_grad_constant(g, 2.0, {}), ConfigError);
        CHECK_THROWS_AS(estimate_grad_constant(g, 2.0, {{"zero", ScalarField(g)}}), ConfigError);
    }
    SUBCASE("probe family in 2D") {
        const Grid g = box({0, 1}, {0, 2}, 17, 33);
        const auto est = estimate_grad_constant(g, 1.8, default_probes(g));
        CHECK(est.khat > 0.0);
        CHECK(est.probe_count == 5);
    }
}

TEST_CASE("gradient guard") {
    const Grid g = line(0, 1, 65);
    const auto u = solve_plap_dirichlet(g, 2.0, ScalarField(g, 1.0));
    const GradientGuard ok(0.55, 2.0);
    const auto before = GradientGuard::checks();
    CHECK_NOTHROW(ok.check(u, 1.0, "constant"));
    CHECK(GradientGuard::checks() == before + 1);
}
