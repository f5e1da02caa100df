#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "plap/errors.hpp"
#include "plap/scheme.hpp"
#include "test_support.hpp"

using namespace plap;
using testing::line;

namespace {

ProblemSpec sub_spec(int n = 65) {
    ProblemSpec s = load_problem(testing::problem("sub_case.plap"));
    s.resolution = {n};
    return s;
}

ProblemSpec degenerate_spec(double p, int n) {
    ProblemSpec s;
    s.p = p;
    s.q = 1.5;
    s.a = 0.2;
    s.b = 0.2;
    s.omega1 = parse("1 + x1");
    s.omega2 = parse("1 + x1");
    s.omega3 = parse("1");
    s.h = parse("(1 + x1) * u^(q-1)");
    s.f = parse("0");
    s.resolution = {n};
    return s;
}

const PipelineContext& sub_context() {
    static const PipelineContext ctx = PipelineContext::prepare(sub_spec());
    return ctx;
}

}  // namespace

TEST_CASE("epsilon") {
    const double lam1 = 9.8696;
    CHECK(make_epsilon(lam1, lam1, 100.0, 0.125, 2, 1.5) == 1.0);
    const double e = make_epsilon(1, lam1, 4, 0.125, 2, 1.5);
    CHECK(e == doctest::Approx(std::pow(1 / lam1, 2)).epsilon(1e-12));
    CHECK(e == doctest::Approx(0.010266).epsilon(1e-4));
    CHECK(4 / (lam1 * 0.125) == doctest::Approx(3.2423).epsilon(1e-4));
    CHECK(make_epsilon(16, lam1, 1e6, 0.125, 2, 1.5) == doctest::Approx(256 * e).epsilon(1e-12));
    CHECK_THROWS_AS(make_epsilon(0, lam1, 4, 0.125, 2, 1.5), ConfigError);
    CHECK_THROWS_AS(make_epsilon(1, lam1, -4, 0.125, 2, 1.5), ConfigError);
}

TEST_CASE("freezing the nonlinearity") {
    const ProblemSpec s = sub_spec(33);
    const Grid g = s.make_grid();
    SUBCASE("zero field") {
        const auto F = freeze_nonlinearity(ScalarField(g), 2.0, 3.0, s, g);
        CHECK(sup_norm(F.base) == 0.0);
        for (auto k : g.interior_nodes()) {
            CHECK(F.coeff[k] == 2.0);
            CHECK(F.at(k, 4.0) == doctest::Approx(2.0 * 2.0));
        }
    }
    SUBCASE("evaluating at the frozen field reproduces the source") {
        const auto u = ScalarField::sample(g, [](double x, double) { return 0.3 * std::sin(3.14159265 * x) + 0.1 * x * (1 - x); });
        for (double lambda : {0.5, 2.0}) {
            const auto F = freeze_nonlinearity(u, lambda, 1.7, s, g);
            const auto direct = source_term(u, lambda, 1.7, s);
            const auto via_F = F.evaluate(u);
            for (auto k : g.interior_nodes()) CHECK(via_F[k] == doctest::Approx(direct[k]).epsilon(1e-12));
        }
    }
    SUBCASE("lower equality with no gradient term") {
        const ProblemSpec d = degenerate_spec(2.0, 33);
        const auto u = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
        const auto F = freeze_nonlinearity(u, 1.0, 5.0, d, g);
        CHECK(sup_norm(F.base) == 0.0);
    }
    SUBCASE("F is nondecreasing in xi") {
        const auto u = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
        const auto F = freeze_nonlinearity(u, 1.0, 1.0, s, g);
        for (auto k : g.interior_nodes()) {
            CHECK(F.base[k] >= 0.0);
            for (double xi = 0; xi < 2; xi += 0.1) CHECK(F.at(k, xi + 0.1) >= F.at(k, xi));
            CHECK(F.at(k, -1.0) == F.at(k, 0.0));
        }
    }
    SUBCASE("broken lower hypothesis is reported") {
        ProblemSpec bad = s;
        bad.h = parse("0.5 * u^(q-1)");
        const auto u = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
        CHECK_THROWS_AS(freeze_nonlinearity(u, 1.0, 1.0, bad, g), HypothesisViolation);
    }
}

TEST_CASE("inner monotone iteration") {
    const Grid g = line(0, 1, 65);
    SUBCASE("constant right-hand side settles after one solve") {
        FrozenNonlinearity F{ScalarField(g, 3.0), ScalarField(g), 1.5};
        const auto super = solve_plap_dirichlet(g, 2.0, ScalarField(g, 4.0));
        const auto r = inner_monotone_solve(F, ScalarField(g), super, 2.0);
        CHECK(sup_distance(r.U, solve_plap_dirichlet(g, 2.0, ScalarField(g, 3.0))) <= 1e-12);
        CHECK(r.iterations <= 2);
        CHECK(r.changes.back() <= 1e-12);
    }
    SUBCASE("p = 2 pure power source, both starts") {
        const double lambda = 0.5, q = 1.5;
        FrozenNonlinearity F{ScalarField(g), ScalarField(g, lambda), q};
        F.coeff.zero_boundary();
        // C x(1-x)/2 is a super-solution once C >= λ (C/8)^{q-1}; 2 qualifies.
        const auto super = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
        const auto sub = 1e-3 * super;
        const auto down = inner_monotone_solve(F, sub, super, 2.0, {}, StartFrom::super);
        const auto up = inner_monotone_solve(F, sub, super, 2.0, {}, StartFrom::sub);
        const auto res = p_laplacian_apply(down.U, 2.0) - F.evaluate(down.U);
        double worst = 0;
        for (auto k : g.interior_nodes()) worst = std::max(worst, std::abs(res[k]));
        CHECK(worst <= 1e-6);
        CHECK(sup_distance(down.U, up.U) <= 1e-6);
        const auto want = oracle::sublinear_monotone_1d(65, 1.0, lambda, q, [](double) { return 1.0; }, 1.0);
        for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(down.U[k] - want[k]) <= 1e-6);
        for (double c : down.changes) CHECK(c >= 0.0);
    }
    SUBCASE("a broken trap is an invariant violation") {
        FrozenNonlinearity F{ScalarField(g, 50.0), ScalarField(g), 1.5};
        F.base.zero_boundary();
        const auto super = ScalarField::sample(g, [](double x, double) { return x * (1 - x) / 2; });
        CHECK_THROWS_AS(inner_monotone_solve(F, ScalarField(g), super, 2.0), InvariantViolation);
    }
}

TEST_CASE("sub- and super-solution checks") {
    const PipelineContext& ctx = sub_context();
    const auto& c = ctx.constants.bundle;
    const auto v = region_classify(1, 1, c, Exponents::of(ctx.spec));
    const double M = *v.M;
    const double eps = make_epsilon(1, ctx.eigen.lambda1, M, c.phi_sup, ctx.spec.p, ctx.spec.q);
    const auto super = (M / c.phi_sup) * ctx.constants.torsion.phi;
    const auto sub = eps * ctx.eigen.u1;
    for (const ScalarField& u : {sub, super, 0.5 * (sub + super)}) {
        const auto F = freeze_nonlinearity(u, 1, 1, ctx.spec, ctx.constants.weights);
        CHECK(verify_subsuper(super, F, ctx.spec.p, BarrierKind::super).ok);
        CHECK(verify_subsuper(sub, F, ctx.spec.p, BarrierKind::sub).ok);
        CHECK_FALSE(verify_subsuper(0.01 * super, F, ctx.spec.p, BarrierKind::super).ok);
    }
    SUBCASE("zero candidate with zero source") {
        const Grid g = line(0, 1, 17);
        FrozenNonlinearity F{ScalarField(g), ScalarField(g, 1.0), 1.5};
        CHECK(verify_subsuper(ScalarField(g), F, 2.0, BarrierKind::sub).ok);
        CHECK(verify_subsuper(ScalarField(g), F, 2.0, BarrierKind::super).ok);
    }
}

TEST_CASE("Picone diagnostic") {
    const Grid g = line(0, 1, 65);
    FrozenNonlinearity F{ScalarField(g, 0.2), ScalarField(g, 1.0), 1.5};
    const auto U = ScalarField::sample(g, [](double x, double) { return x * (1 - x); });
    const auto same = picone_diagnostic(U, U, F, 2.0);
    CHECK(same.gap == 0.0);
    CHECK(same.max_integrand == 0.0);
    CHECK(same.scale > 0.0);

    SUBCASE("integrand is nonpositive for distinct positive fields") {
        std::mt19937 rng(67);
        std::uniform_real_distribution<double> Ud(0.05, 2.0);
        for (int trial = 0; trial < 200; ++trial) {
            const double p = 1.6 + 2 * Ud(rng) / 2;
            FrozenNonlinearity Fr{ScalarField(g), ScalarField(g), 1.05 + (p - 1.1) * Ud(rng) / 2};
            ScalarField A(g), B(g);
            for (auto k : g.interior_nodes()) {
                Fr.base[k] = Ud(rng);
                Fr.coeff[k] = Ud(rng);
                A[k] = Ud(rng);
                B[k] = Ud(rng);
            }
            const auto r = picone_diagnostic(A, B, Fr, p);
            CHECK(r.max_integrand <= 1e-12);
            CHECK(r.gap <= 1e-12 * std::max(1.0, r.scale));
        }
    }
    SUBCASE("the two inner limits agree") {
        const PipelineContext& ctx = sub_context();
        const auto& c = ctx.constants.bundle;
        const double M = *compute_M(1, 1, c, Exponents::of(ctx.spec));
        const double eps = make_epsilon(1, ctx.eigen.lambda1, M, c.phi_sup, ctx.spec.p, ctx.spec.q);
        const auto super = (M / c.phi_sup) * ctx.constants.torsion.phi;
        const auto sub = eps * ctx.eigen.u1;
        const auto Fu = freeze_nonlinearity(0.5 * (sub + super), 1, 1, ctx.spec, ctx.constants.weights);
        const auto a = inner_monotone_solve(Fu, sub, super, ctx.spec.p, {}, StartFrom::super);
        const auto b = inner_monotone_solve(Fu, sub, super, ctx.spec.p, {}, StartFrom::sub);
        CHECK(sup_distance(a.U, b.U) <= 1e-6 * M);
        const auto r = picone_diagnostic(a.U, b.U, Fu, ctx.spec.p);
        CHECK(std::abs(r.gap) <= 1e-8 * r.scale);
        CHECK(r.max_integrand <= 1e-12);
    }
    SUBCASE("nonpositive input") { CHECK_THROWS_AS(picone_diagnostic(U, ScalarField(g), F, 2.0), ConfigError); }
}

TEST_CASE("solution bound certificates") {
    const PipelineContext& ctx = sub_context();
    const auto& c = ctx.constants.bundle;
    const double M = 0.2, eps = 0.05;
    const auto& phi = ctx.constants.torsion.phi;
    const auto lower = eps * ctx.eigen.u1;
    const auto upper = (M / c.phi_sup) * phi;

    auto at_lower = verify_solution_bounds(lower, eps, ctx.eigen.u1, M, phi, c.phi_sup, c.gamma);
    CHECK(at_lower.lower_ok);
    CHECK(at_lower.lower_excess <= 0.0);
    auto at_upper = verify_solution_bounds(upper, eps, ctx.eigen.u1, M, phi, c.phi_sup, c.gamma);
    CHECK(at_upper.upper_ok);
    CHECK(at_upper.gradient_ok);
    CHECK(at_upper.gradient_sup <= at_upper.gradient_bound);

    auto bumped = upper;
    bumped[20] += 2e-6 * M;
    CHECK_FALSE(verify_solution_bounds(bumped, eps, ctx.eigen.u1, M, phi, c.phi_sup, c.gamma).upper_ok);
    CHECK_THROWS_AS(verify_solution_bounds(ScalarField(line(0, 1, 5)), eps, ctx.eigen.u1, M, phi, c.phi_sup, c.gamma),
                    GridMismatch);
}

TEST_CASE("outer fixed point") {
    SUBCASE("SUB problem at (1, 1)") {
        const PipelineContext& ctx = sub_context();
        const auto rep = outer_fixed_point(ctx, 1, 1);
        CHECK(rep.converged);
        CHECK(rep.status == SolveStatus::converged);
        CHECK(rep.outer_iters <= 50);
        const auto& ce = rep.certificates;
        CHECK(ce.lower_bound_ok);
        CHECK(ce.upper_bound_ok);
        CHECK(ce.gradient_bound_ok);
        CHECK(ce.pde_residual <= 1e-5 * ce.residual_scale);
        CHECK(ce.two_sided_gap <= 1e-6 * rep.M);
        CHECK(std::abs(ce.picone_gap) <= 1e-8 * ce.picone_scale);
        for (auto k : ctx.grid.interior_nodes()) CHECK(rep.solution[k] > 0.0);
        CHECK(rep.outer_trace.size() == static_cast<std::size_t>(rep.outer_iters));
    }
    SUBCASE("iteration cap gives an inconclusive report") {
        OuterOptions o;
        o.max_outer = 1;
        const auto rep = outer_fixed_point(sub_context(), 1, 1, o);
        CHECK_FALSE(rep.converged);
        CHECK(rep.status == SolveStatus::inconclusive);
        CHECK_FALSE(rep.note.empty());
    }
    SUBCASE("SUPER point outside the region is refused") {
        ProblemSpec s = load_problem(testing::problem("super_case.plap"));
        s.resolution = {33};
        const auto ctx = PipelineContext::prepare(s);
        const double K = region_constant_K(ctx.constants.bundle, Exponents::of(s));
        const double beta = std::pow(2 * K, 1 / (s.p - s.q));
        CHECK_THROWS_AS(outer_fixed_point(ctx, 1, beta, {}), OutOfRegion);
    }
    SUBCASE("no gradient term reduces to one sublinear solve") {
        for (double lambda : {0.5, 3.0}) {
            const auto ctx = PipelineContext::prepare(degenerate_spec(2.0, 129));
            const auto rep = outer_fixed_point(ctx, lambda, 7.0);
            CHECK(rep.converged);
            REQUIRE(rep.outer_iters == 2);
            CHECK(rep.outer_trace[1] == 0.0);
            const auto want = oracle::sublinear_monotone_1d(129, 1.0, lambda, 1.5, [](double x) { return 1 + x; }, 2.0);
            double err = 0;
            for (std::size_t k = 0; k < want.size(); ++k) err = std::max(err, std::abs(rep.solution[k] - want[k]));
            CHECK(err <= 1e-6);
        }
    }
}
