#include "plap/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace plap {

namespace {

void require_weight(const ScalarField& w, const char* what) {
    bool nonzero = false;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!(w[k] >= 0.0)) throw ConfigError(fmt::format("{} must be nonnegative (node {} holds {})", what, k, w[k]));
        if (!w.grid().is_boundary(k) && w[k] > 0.0) nonzero = true;
    }
    if (!nonzero) throw ConfigError(fmt::format("{} vanishes at every interior node", what));
}

double rayleigh_quotient(const ScalarField& u, const ScalarField& omega1, double p) {
    const VectorField grad = gradient(u);
    ScalarField num(u.grid()), den(u.grid());
    for (std::size_t k = 0; k < u.size(); ++k) {
        num[k] = std::pow(grad.norm_at(k), p);
        den[k] = omega1[k] * std::pow(std::abs(u[k]), p);
    }
    return integrate(num) / integrate(den);
}

ScalarField eigen_rhs(const ScalarField& u, const ScalarField& omega1, double p) {
    ScalarField g(u.grid());
    for (std::size_t k = 0; k < u.size(); ++k) g[k] = omega1[k] * std::pow(std::max(u[k], 0.0), p - 1.0);
    return g;
}

}  // namespace

TorsionResult torsion_function(const Grid& grid, double p, const ScalarField& w, const SolveOptions& opts) {
    require_weight(w, "torsion weight");
    TorsionResult t{solve_plap_dirichlet(grid, p, w, opts), 0.0};
    t.phi_sup = sup_norm(t.phi);
    return t;
}

EigenPair first_eigenpair(const Grid& grid, double p, const ScalarField& omega1, const SolveOptions& opts,
                          const EigenOptions& eig) {
    require_weight(omega1, "eigenvalue weight");

    ScalarField u = torsion_function(grid, p, omega1, opts).phi;
    u *= 1.0 / sup_norm(u);

    EigenPair out{0.0, u, 0.0, 0, 0.0};
    double lambda_prev = 0.0;
    ScalarField v = u;  // unnormalised iterate, reused as the next warm start
    std::vector<IterationRecord> history;
    for (int it = 1; it <= eig.max_iter; ++it) {
        const ScalarField g = eigen_rhs(u, omega1, p);
        const ScalarField guess = v;
        v = solve_plap_dirichlet(grid, p, g, opts, &guess);
        const double vsup = sup_norm(v);
        if (!(vsup > 0.0)) throw SolverError("inverse iteration collapsed to zero", history);
        ScalarField next = (1.0 / vsup) * v;
        // -Δ_p (v / |v|) = |v|^{1-p} ω₁ u^{p-1}, so at the fixed point λ = |v|^{1-p}.
        const double lambda = std::pow(vsup, 1.0 - p);
        const double change = sup_distance(next, u);
        history.push_back({it, change, lambda});
        u = std::move(next);
        if (it > 1 && std::abs(lambda - lambda_prev) < eig.lambda_tol * lambda && change < eig.field_tol) {
            out.lambda1 = lambda;
            out.iterations = it;
            break;
        }
        lambda_prev = lambda;
        if (it == eig.max_iter)
            throw SolverError(fmt::format("inverse iteration did not converge in {} sweeps (last change {:.3e})",
                                          eig.max_iter, change),
                              history);
    }

    out.u1 = std::move(u);
    out.rayleigh = rayleigh_quotient(out.u1, omega1, p);
    const ScalarField lhs = p_laplacian_apply(out.u1, p);
    const ScalarField rhs = eigen_rhs(out.u1, omega1, p);
    double res = 0.0;
    for (std::size_t k = 0; k < lhs.size(); ++k)
        if (!grid.is_boundary(k)) res = std::max(res, std::abs(lhs[k] - out.lambda1 * rhs[k]));
    out.residual = res;
    return out;
}

}  // namespace plap
