#include "plap/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace plap {

double FrozenNonlinearity::at(std::size_t node, double xi) const {
    return coeff[node] * std::pow(std::max(xi, 0.0), q - 1.0) + base[node];
}

ScalarField FrozenNonlinearity::evaluate(const ScalarField& xi) const {
    if (!(xi.grid() == base.grid())) throw GridMismatch("frozen nonlinearity evaluated on a different grid");
    ScalarField out(xi.grid());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = xi.grid().is_boundary(k) ? 0.0 : at(k, xi[k]);
    return out;
}

double make_epsilon(double lambda, double lambda1, double M, double phi_sup, double p, double q) {
    for (double v : {lambda, lambda1, M, phi_sup})
        if (!(v > 0.0)) throw ConfigError("make_epsilon needs positive lambda, lambda1, M and phi_sup");
    const double from_eigen = std::pow(lambda / lambda1, 1.0 / (p - q));
    const double from_super = M * std::pow(lambda1, -1.0 / (p - 1.0)) / phi_sup;
    return std::min(from_eigen, from_super);
}

namespace {

struct NodeTerms {
    double h = 0.0;
    double f = 0.0;
};

// h(x, u) and f(x, u, |∇u|) at every interior node.
template <typename Fn>
void for_each_interior_term(const ScalarField& u, const ProblemSpec& spec, Fn&& fn) {
    const Grid& grid = u.grid();
    const ScalarField gnorm = gradient(u).magnitude();
    Bindings bd = spec.parameter_bindings();
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        if (grid.is_boundary(k)) continue;
        const auto x = grid.position(k);
        const double uk = std::max(u[k], 0.0);
        bd.set(Var::x1, x[0]).set(Var::x2, x[1]).set(Var::u, uk).set(Var::gnorm, gnorm[k]);
        NodeTerms t;
        try {
            t.h = evaluate(spec.h, bd);
            t.f = evaluate(spec.f, bd);
        } catch (const EvalError& err) {
            throw EvalError(fmt::format("at x = ({}, {}), u = {}, gnorm = {}: {}", x[0], x[1], uk, gnorm[k], err.what()));
        }
        fn(k, uk, t);
    }
}

}  // namespace

ScalarField source_term(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec) {
    ScalarField out(u.grid());
    for_each_interior_term(u, spec, [&](std::size_t k, double, const NodeTerms& t) { out[k] = lambda * t.h + beta * t.f; });
    return out;
}

FrozenNonlinearity freeze_nonlinearity(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec,
                                       const WeightFields& weights) {
    if (!(u.grid() == weights.omega1.grid())) throw GridMismatch("frozen field and weights on different grids");
    FrozenNonlinearity F{ScalarField(u.grid()), ScalarField(u.grid()), spec.q};
    for_each_interior_term(u, spec, [&](std::size_t k, double uk, const NodeTerms& t) {
        const double w1 = weights.omega1[k];
        double base = lambda * (t.h - w1 * std::pow(uk, spec.q - 1.0)) + beta * t.f;
        if (base < 0.0) {
            if (base < -1e-12) {
                const auto x = u.grid().position(k);
                throw HypothesisViolation(fmt::format("frozen base is negative ({:.6g}) at x = ({}, {}): u = {}, "
                                                      "h = {}, omega1 = {}, f = {}",
                                                      base, x[0], x[1], uk, t.h, w1, t.f));
            }
            base = 0.0;
        }
        F.base[k] = base;
        F.coeff[k] = lambda * w1;
    });
    return F;
}

FrozenNonlinearity freeze_nonlinearity(const ScalarField& u, double lambda, double beta, const ProblemSpec& spec,
                                       const Grid& grid) {
    if (!(u.grid() == grid)) throw GridMismatch("frozen field lives on a different grid");
    return freeze_nonlinearity(u, lambda, beta, spec, sample_weights(spec, grid));
}

// ---------------------------------------------------------------------------

InnerResult inner_monotone_solve(const FrozenNonlinearity& F, const ScalarField& sub, const ScalarField& super,
                                 double p, const InnerOptions& opts, StartFrom start, const GradientGuard* guard) {
    const Grid& grid = super.grid();
    if (!(sub.grid() == grid) || !(F.base.grid() == grid)) throw GridMismatch("inner solve inputs on different grids");
    const double scale = sup_norm(super);
    const double slack = 10.0 * opts.solve.tol_residual * std::max(1.0, 1.0 / (p - 1.0)) * scale;
    if (!check_comparison(sub, super, slack)) throw InvariantViolation("sub-solution exceeds super-solution");

    InnerResult res{start == StartFrom::super ? super : sub, 0, {}, slack};
    const double stop = opts.stop_rel * scale;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const ScalarField g = F.evaluate(res.U);
        const double gsup = sup_norm(g);
        SolveOptions so = opts.solve;
        if (gsup > 0.0) so.tol_residual *= std::min(1.0, gsup);
        ScalarField next = solve_plap_dirichlet(grid, p, g, so, &res.U);
        if (guard) guard->check(next, gsup, "inner monotone iteration");

        const bool down = start == StartFrom::super;
        for (std::size_t k = 0; k < next.size(); ++k) {
            const bool monotone = down ? next[k] <= res.U[k] + slack : next[k] >= res.U[k] - slack;
            const bool trapped = next[k] >= sub[k] - slack && next[k] <= super[k] + slack;
            if (!monotone || !trapped) {
                const auto x = grid.position(k);
                throw InvariantViolation(fmt::format(
                    "monotone iteration left its trap at sweep {} (x = ({}, {}), U = {:.12g}, previous = {:.12g}, "
                    "sub = {:.12g}, super = {:.12g})",
                    it, x[0], x[1], next[k], res.U[k], sub[k], super[k]));
            }
        }
        const double change = sup_distance(next, res.U);
        res.changes.push_back(change);
        res.U = std::move(next);
        res.iterations = it;
        if (change < stop) return res;
    }
    throw SolverError(fmt::format("monotone iteration did not settle in {} sweeps (last change {:.3e}, target {:.3e})",
                                  opts.max_iter, res.changes.empty() ? 0.0 : res.changes.back(), stop),
                      {});
}

BarrierReport verify_subsuper(const ScalarField& candidate, const FrozenNonlinearity& F, double p, BarrierKind kind,
                              double tol_rel) {
    const ScalarField lhs = p_laplacian_apply(candidate, p);
    const ScalarField rhs = F.evaluate(candidate);
    BarrierReport rep;
    rep.tolerance = tol_rel * std::max({sup_norm(lhs), sup_norm(rhs), std::numeric_limits<double>::min()});
    bool first = true;
    for (std::size_t k = 0; k < candidate.size(); ++k) {
        if (candidate.grid().is_boundary(k)) continue;
        const double d = lhs[k] - rhs[k];
        const bool worse = kind == BarrierKind::super ? d < rep.worst : d > rep.worst;
        if (first || worse) {
            rep.worst = d;
            rep.node = k;
            first = false;
        }
    }
    rep.ok = kind == BarrierKind::super ? rep.worst >= -rep.tolerance : rep.worst <= rep.tolerance;
    return rep;
}

PiconeResult picone_diagnostic(const ScalarField& U, const ScalarField& V, const FrozenNonlinearity& F, double p) {
    if (!(U.grid() == V.grid())) throw GridMismatch("Picone diagnostic on different grids");
    const Grid& grid = U.grid();
    ScalarField integrand(grid), magnitude(grid);
    PiconeResult out;
    out.max_integrand = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < U.size(); ++k) {
        if (grid.is_boundary(k)) continue;
        if (!(U[k] > 0.0) || !(V[k] > 0.0))
            throw ConfigError(fmt::format("Picone diagnostic needs positive fields (node {}: U = {}, V = {})", k, U[k], V[k]));
        const double ru = F.at(k, U[k]) / std::pow(U[k], p - 1.0);
        const double rv = F.at(k, V[k]) / std::pow(V[k], p - 1.0);
        integrand[k] = (ru - rv) * (std::pow(U[k], p) - std::pow(V[k], p));
        magnitude[k] = F.at(k, U[k]) * U[k];
        out.max_integrand = std::max(out.max_integrand, integrand[k]);
    }
    out.gap = integrate(integrand);
    out.scale = integrate(magnitude);
    return out;
}

BoundCertificates verify_solution_bounds(const ScalarField& u, double epsilon, const ScalarField& u1, double M,
                                         const ScalarField& phi, double phi_sup, double gamma) {
    if (!(u.grid() == u1.grid()) || !(u.grid() == phi.grid())) throw GridMismatch("bound certificates on different grids");
    const double slack = 1e-6 * M;
    BoundCertificates c;
    c.lower_excess = -std::numeric_limits<double>::infinity();
    c.upper_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < u.size(); ++k) {
        c.lower_excess = std::max(c.lower_excess, epsilon * u1[k] - u[k]);
        c.upper_excess = std::max(c.upper_excess, u[k] - (M / phi_sup) * phi[k]);
    }
    c.gradient_sup = sup_norm(gradient(u));
    c.gradient_bound = gamma * M;
    c.lower_ok = c.lower_excess <= slack;
    c.upper_ok = c.upper_excess <= slack;
    c.gradient_ok = c.gradient_sup <= c.gradient_bound + slack;
    return c;
}

// ---------------------------------------------------------------------------

PipelineContext PipelineContext::prepare(const ProblemSpec& spec, const SolveOptions& opts) {
    spec.check();
    Grid grid = spec.make_grid();
    ConstantsComputation cc = compute_constants(spec, grid, opts);
    auto eigen = [&] {
        try {
            return first_eigenpair(grid, spec.p, cc.weights.omega1, opts);
        } catch (const SolverError& err) {
            throw SolverError(fmt::format("first eigenpair: {}", err.what()), err.history());
        }
    };
    EigenPair eig = eigen();
    return {spec, grid, std::move(cc), std::move(eig)};
}

namespace {

double c1_distance(const ScalarField& a, const ScalarField& b) {
    return sup_distance(a, b) + sup_distance(gradient(a), gradient(b));
}

void require_membership(const ScalarField& u, const ScalarField& sub, const ScalarField& super, double grad_cap,
                        double slack, int step) {
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k] < sub[k] - slack || u[k] > super[k] + slack) {
            const auto x = u.grid().position(k);
            throw InvariantViolation(fmt::format("outer iterate {} left the invariant set at x = ({}, {}): u = {:.12g} "
                                                 "not in [{:.12g}, {:.12g}]",
                                                 step, x[0], x[1], u[k], sub[k], super[k]));
        }
    }
    const double g = sup_norm(gradient(u));
    if (g > grad_cap)
        throw InvariantViolation(
            fmt::format("outer iterate {} violates the gradient bound: |grad u| = {:.12g} > {:.12g}", step, g, grad_cap));
}

}  // namespace

SolveReport outer_fixed_point(const PipelineContext& ctx, double lambda, double beta, const OuterOptions& opts) {
    const ProblemSpec& spec = ctx.spec;
    const ConstantsBundle& c = ctx.constants.bundle;
    const Exponents ex = Exponents::of(spec);

    SolveReport rep{SolveStatus::inconclusive, false, ScalarField(ctx.grid), 0, {}, {}, {}, 0.0, 0.0, lambda, beta, {}, {}};
    rep.verdict = region_classify(lambda, beta, c, ex);
    if (!rep.verdict.in_region)
        throw OutOfRegion(fmt::format("(lambda, beta) = ({}, {}) is outside the admissible region ({} case, margin {:.6g})",
                                      lambda, beta, case_name(rep.verdict.case_tag), rep.verdict.margin));
    const double M = *rep.verdict.M;
    rep.M = M;
    rep.epsilon = make_epsilon(lambda, ctx.eigen.lambda1, M, c.phi_sup, spec.p, spec.q);

    const ScalarField sub = rep.epsilon * ctx.eigen.u1;
    const ScalarField super = (M / c.phi_sup) * ctx.constants.torsion.phi;
    const double member_slack = 1e-6 * M;
    const double grad_cap = c.gamma * M * (1.0 + 1e-6);
    const GradientGuard guard(c.khat, spec.p);

    ScalarField u = sub;
    require_membership(u, sub, super, grad_cap, member_slack, 0);

    FrozenNonlinearity F{ScalarField(ctx.grid), ScalarField(ctx.grid), spec.q};
    bool settled = false;
    for (int k = 1; k <= opts.max_outer; ++k) {
        F = freeze_nonlinearity(u, lambda, beta, spec, ctx.constants.weights);
        const auto super_check = verify_subsuper(super, F, spec.p, BarrierKind::super);
        const auto sub_check = verify_subsuper(sub, F, spec.p, BarrierKind::sub);
        if (!super_check.ok || !sub_check.ok)
            throw InvariantViolation(fmt::format(
                "outer step {}: barrier check failed (super worst {:.3e}, sub worst {:.3e}, tolerances {:.3e}/{:.3e})", k,
                super_check.worst, sub_check.worst, super_check.tolerance, sub_check.tolerance));

        InnerResult inner = inner_monotone_solve(F, sub, super, spec.p, opts.inner, StartFrom::super, &guard);
        require_membership(inner.U, sub, super, grad_cap, member_slack, k);
        const double dist = c1_distance(inner.U, u);
        rep.outer_trace.push_back(dist);
        rep.inner_iters.push_back(inner.iterations);
        rep.outer_iters = k;
        u = std::move(inner.U);
        if (dist < opts.stop_rel * M) {
            settled = true;
            break;
        }
    }
    rep.solution = u;

    Certificates& cert = rep.certificates;
    const auto bounds = verify_solution_bounds(u, rep.epsilon, ctx.eigen.u1, M, ctx.constants.torsion.phi, c.phi_sup, c.gamma);
    cert.lower_bound_ok = bounds.lower_ok;
    cert.upper_bound_ok = bounds.upper_ok;
    cert.gradient_bound_ok = bounds.gradient_ok;

    const ScalarField lhs = p_laplacian_apply(u, spec.p);
    const ScalarField rhs = source_term(u, lambda, beta, spec);
    for (std::size_t n = 0; n < u.size(); ++n)
        if (!ctx.grid.is_boundary(n)) cert.pde_residual = std::max(cert.pde_residual, std::abs(lhs[n] - rhs[n]));
    cert.residual_scale = lambda * c.omega_sup * std::pow(M, spec.q - 1.0) +
                          beta * c.omega_sup * std::pow(c.gamma, spec.b) * std::pow(M, spec.a + spec.b);

    // Two-sided check of the last frozen problem: the limit from below must match the one from above.
    if (rep.outer_iters > 0) {
        const InnerResult from_sub = inner_monotone_solve(F, sub, super, spec.p, opts.inner, StartFrom::sub, &guard);
        cert.two_sided_gap = sup_distance(from_sub.U, u);
        const PiconeResult pic = picone_diagnostic(u, from_sub.U, F, spec.p);
        cert.picone_gap = pic.gap;
        cert.picone_scale = pic.scale;
        cert.picone_max_integrand = pic.max_integrand;
    }

    const bool certified = cert.lower_bound_ok && cert.upper_bound_ok && cert.gradient_bound_ok &&
                           cert.pde_residual <= opts.residual_rel * cert.residual_scale;
    rep.converged = settled && certified;
    rep.status = rep.converged ? SolveStatus::converged : SolveStatus::inconclusive;
    if (!settled)
        rep.note = fmt::format("outer iteration not settled after {} steps (last C1 distance {:.3e})", rep.outer_iters,
                               rep.outer_trace.empty() ? 0.0 : rep.outer_trace.back());
    else if (!certified)
        rep.note = fmt::format("settled but not certified (residual {:.3e} vs scale {:.3e})", cert.pde_residual,
                               cert.residual_scale);
    return rep;
}

}  // namespace plap
