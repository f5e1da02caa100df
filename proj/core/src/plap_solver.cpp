#include "plap/plap_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "stencil.hpp"

namespace plap {

void SolveOptions::check() const {
    if (!(tol_residual > 0.0)) throw ConfigError(fmt::format("tol_residual must be positive, got {}", tol_residual));
    if (max_iter < 1) throw ConfigError(fmt::format("max_iter must be at least 1, got {}", max_iter));
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError(fmt::format("damping must lie in (0, 1], got {}", damping));
}

double solver_regularization(const Grid& grid, double p, double g_sup) {
    return regularization_factor * std::pow(g_sup * grid.diameter_scale(), 1.0 / (p - 1.0));
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Discrete system -Δ_p^h u = g restricted to the interior unknowns.
class DiscreteSystem {
public:
    DiscreteSystem(const Grid& grid, double p, double delta)
        : grid_(grid), p_(p), delta_(delta), mids_(detail::build_midpoints(grid)), interior_(grid.interior_nodes()),
          slot_(grid.node_count(), -1) {
        for (std::size_t i = 0; i < interior_.size(); ++i) slot_[interior_[i]] = static_cast<int>(i);
    }

    std::size_t unknowns() const noexcept { return interior_.size(); }

    Vec residual(const ScalarField& u, const ScalarField& g) const {
        const ScalarField a = p_laplacian_apply(u, p_, delta_);
        Vec r(static_cast<Eigen::Index>(interior_.size()));
        for (std::size_t i = 0; i < interior_.size(); ++i) r[static_cast<Eigen::Index>(i)] = a[interior_[i]] - g[interior_[i]];
        return r;
    }

    // Newton Jacobian when `frozen` is false; the frozen-coefficient (Picard) operator otherwise.
    SpMat matrix(const ScalarField& u, bool frozen) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(mids_.size() * 12);
        for (const auto& m : mids_) {
            const auto fg = detail::face_gradient(m, u.values());
            double d_axial, d_trans;
            if (frozen) {
                d_axial = detail::face_diffusivity(fg, p_, delta_);
                d_trans = 0.0;
            } else {
                const auto d = detail::face_flux_derivative(fg, p_, delta_);
                d_axial = d[0];
                d_trans = d[1];
            }
            const double inv_h = 1.0 / grid_.spacing(m.axis);
            const int rl = slot_[m.left];
            const int rr = slot_[m.right];
            for (int t = 0; t < m.nterms; ++t) {
                const int col = slot_[m.terms[t].node];
                if (col < 0) continue;
                const double dflux = d_axial * m.terms[t].c_axial + d_trans * m.terms[t].c_trans;
                if (dflux == 0.0) continue;
                if (rl >= 0) trip.emplace_back(rl, col, -dflux * inv_h);
                if (rr >= 0) trip.emplace_back(rr, col, dflux * inv_h);
            }
        }
        const auto n = static_cast<Eigen::Index>(interior_.size());
        SpMat J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        return J;
    }

    void scatter(const Vec& x, ScalarField& u) const {
        for (std::size_t i = 0; i < interior_.size(); ++i) u[interior_[i]] = x[static_cast<Eigen::Index>(i)];
    }

    void add_scaled(ScalarField& u, const Vec& d, double alpha) const {
        for (std::size_t i = 0; i < interior_.size(); ++i) u[interior_[i]] += alpha * d[static_cast<Eigen::Index>(i)];
    }

    Vec gather(const ScalarField& g) const {
        Vec x(static_cast<Eigen::Index>(interior_.size()));
        for (std::size_t i = 0; i < interior_.size(); ++i) x[static_cast<Eigen::Index>(i)] = g[interior_[i]];
        return x;
    }

    double p() const noexcept { return p_; }
    double delta() const noexcept { return delta_; }

private:
    Grid grid_;
    double p_;
    double delta_;
    std::vector<detail::Midpoint> mids_;
    std::vector<std::size_t> interior_;
    std::vector<int> slot_;
};

bool linear_solve(const SpMat& A, const Vec& rhs, Vec& x) {
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) return false;
    x = lu.solve(rhs);
    return lu.info() == Eigen::Success && x.allFinite();
}

// Scale u along its ray so that the residual of the (p-1)-homogeneous operator is least-squares minimal.
void rescale_to_rhs(const DiscreteSystem& sys, ScalarField& u, const ScalarField& g) {
    const ScalarField zero(u.grid());
    const Vec au = sys.residual(u, zero);
    const Vec gv = sys.gather(g);
    const double den = au.squaredNorm();
    if (!(den > 0.0)) return;
    const double t = au.dot(gv) / den;
    if (!(t > 0.0) || !std::isfinite(t)) return;
    u *= std::pow(t, 1.0 / (sys.p() - 1.0));
}

struct StageResult {
    bool converged = false;
    double residual = 0.0;
};

StageResult newton_stage(const DiscreteSystem& sys, const ScalarField& g, ScalarField& u, double tol_abs, int max_iter,
                         double damping, std::vector<IterationRecord>& trace) {
    Vec r = sys.residual(u, g);
    double rsup = r.lpNorm<Eigen::Infinity>();
    int base = trace.empty() ? 0 : trace.back().iter;
    trace.push_back({base + 1, rsup, 0.0});
    for (int it = 0; it < max_iter; ++it) {
        if (rsup <= tol_abs) return {true, rsup};
        if (!std::isfinite(rsup)) return {false, rsup};

        Vec d;
        double used = 0.0;
        bool accepted = false;
        if (linear_solve(sys.matrix(u, false), -r, d)) {
            const double r2 = r.norm();
            for (double alpha = damping; alpha >= 1.0 / 4096.0; alpha *= 0.5) {
                ScalarField trial = u;
                sys.add_scaled(trial, d, alpha);
                Vec rt = sys.residual(trial, g);
                if (rt.allFinite() && rt.norm() <= (1.0 - 1e-4 * alpha) * r2) {
                    u = std::move(trial);
                    r = std::move(rt);
                    used = alpha;
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            // Picard fallback: freeze the diffusivity at the current iterate.
            Vec x;
            if (!linear_solve(sys.matrix(u, true), sys.gather(g), x)) return {false, rsup};
            sys.scatter(x, u);
            r = sys.residual(u, g);
        }
        rsup = r.lpNorm<Eigen::Infinity>();
        trace.push_back({trace.back().iter + 1, rsup, used});
    }
    return {rsup <= tol_abs, rsup};
}

bool wants_continuation(double p) { return p >= 2.5 || p <= 1.6; }

}  // namespace

PoissonSolution solve_plap_dirichlet_traced(const Grid& grid, double p, const ScalarField& g, const SolveOptions& opts,
                                            const ScalarField* initial_guess) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError(fmt::format("p-Laplacian needs p > 1, got {}", p));
    opts.check();
    if (!(g.grid() == grid)) throw GridMismatch("right-hand side lives on a different grid");
    for (double v : g.values())
        if (!std::isfinite(v)) throw ConfigError("right-hand side has non-finite values");
    if (initial_guess && !(initial_guess->grid() == grid)) throw GridMismatch("initial guess lives on a different grid");

    const double gsup = sup_norm(g);
    const double tol_abs = opts.tol_residual * std::max(1.0, gsup);
    PoissonSolution out{ScalarField(grid), 0.0, {}};
    if (gsup == 0.0) return out;

    const double delta = solver_regularization(grid, p, gsup);
    const DiscreteSystem target(grid, p, delta);

    if (initial_guess) {
        ScalarField u = *initial_guess;
        u.zero_boundary();
        std::vector<IterationRecord> trace;
        const auto res = newton_stage(target, g, u, tol_abs, std::min(opts.max_iter, 50), opts.damping, trace);
        if (res.converged) return {std::move(u), res.residual, std::move(trace)};
        out.trace = std::move(trace);
    }

    // Linear p = 2 solve as the starting point.
    ScalarField u(grid);
    {
        const DiscreteSystem lin(grid, 2.0, 0.0);
        Vec x;
        if (!linear_solve(lin.matrix(u, true), lin.gather(g), x))
            throw SolverError("linear Poisson solve failed", out.trace);
        lin.scatter(x, u);
    }

    std::vector<double> stages;
    if (opts.continuation && wants_continuation(p)) {
        const double step = p > 2.0 ? 0.25 : -0.25;
        for (double s = 2.0 + step; (step > 0 ? s < p : s > p) && std::abs(s - p) > 1e-12; s += step) stages.push_back(s);
    }
    stages.push_back(p);

    const double stage_tol = std::max(opts.tol_residual, 1e-6) * std::max(1.0, gsup);
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const bool last = k + 1 == stages.size();
        const double ps = stages[k];
        const DiscreteSystem sys = last ? target : DiscreteSystem(grid, ps, solver_regularization(grid, ps, gsup));
        rescale_to_rhs(sys, u, g);
        const auto res = newton_stage(sys, g, u, last ? tol_abs : stage_tol, opts.max_iter, opts.damping, out.trace);
        if (!res.converged) {
            throw SolverError(fmt::format("p-Laplacian solve (p = {}) did not converge at stage p = {}: residual {:.3e} "
                                          "after {} iterations (tolerance {:.3e})",
                                          p, ps, res.residual, opts.max_iter, last ? tol_abs : stage_tol),
                              out.trace);
        }
        out.residual = res.residual;
    }
    out.u = std::move(u);
    return out;
}

ScalarField solve_plap_dirichlet(const Grid& grid, double p, const ScalarField& g, const SolveOptions& opts,
                                 const ScalarField* initial_guess) {
    return solve_plap_dirichlet_traced(grid, p, g, opts, initial_guess).u;
}

bool check_comparison(const ScalarField& u1, const ScalarField& u2, double slack) {
    if (!(u1.grid() == u2.grid())) throw GridMismatch("comparison of fields on different grids");
    for (std::size_t k = 0; k < u1.size(); ++k)
        if (!(u1[k] <= u2[k] + slack)) return false;
    return true;
}

// ---------------------------------------------------------------------------

std::vector<Probe> default_probes(const Grid& grid) {
    std::vector<Probe> probes;
    probes.push_back({"constant", ScalarField(grid, 1.0)});

    for (unsigned seed : {1u, 2u, 3u}) {
        std::mt19937 rng(seed);
        std::bernoulli_distribution coin(0.5);
        constexpr int blocks = 4;
        std::array<int, blocks * blocks> sign{};
        for (int& s : sign) s = coin(rng) ? 1 : -1;
        ScalarField g(grid);
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            const auto ij = grid.ijk(k);
            int b[2] = {0, 0};
            for (int a = 0; a < grid.dimension(); ++a) b[a] = std::min(blocks - 1, ij[a] * blocks / grid.count(a));
            g[k] = sign[static_cast<std::size_t>(b[0] + blocks * b[1])];
        }
        probes.push_back({fmt::format("checkerboard-{}", seed), std::move(g)});
    }

    double radius = std::numeric_limits<double>::max();
    std::array<double, 2> centre{};
    for (int a = 0; a < grid.dimension(); ++a) {
        radius = std::min(radius, 0.25 * grid.extent(a).length());
        centre[a] = grid.extent(a).lo + 0.35 * grid.extent(a).length();
    }
    probes.push_back({"bump", ScalarField::sample(grid, [&](double x, double y) {
                          const double dx = x - centre[0];
                          const double dy = grid.dimension() > 1 ? y - centre[1] : 0.0;
                          return std::max(0.0, 1.0 - (dx * dx + dy * dy) / (radius * radius));
                      })});
    return probes;
}

GradConstantEstimate estimate_grad_constant(const Grid& grid, double p, const std::vector<Probe>& probes,
                                            const SolveOptions& opts) {
    if (probes.empty()) throw ConfigError("gradient-constant estimation needs at least one probe");
    GradConstantEstimate est;
    for (const auto& probe : probes) {
        const double gsup = sup_norm(probe.g);
        if (gsup == 0.0) throw ConfigError(fmt::format("probe '{}' is identically zero", probe.name));
        ScalarField u(grid);
        try {
            u = solve_plap_dirichlet(grid, p, probe.g, opts);
        } catch (const SolverError& err) {
            throw SolverError(fmt::format("probe '{}': {}", probe.name, err.what()), err.history());
        }
        const double ratio = sup_norm(gradient(u)) / std::pow(gsup, 1.0 / (p - 1.0));
        ++est.probe_count;
        if (ratio > est.max_ratio) {
            est.max_ratio = ratio;
            est.worst_probe = probe.name;
        }
    }
    est.khat = grad_constant_safety * est.max_ratio;
    return est;
}

namespace {
std::atomic<std::size_t> g_guard_checks{0};
std::atomic<std::size_t> g_guard_violations{0};
}  // namespace

void GradientGuard::check(const ScalarField& u, double g_sup, std::string_view context) const {
    g_guard_checks.fetch_add(1, std::memory_order_relaxed);
    const double grad = sup_norm(gradient(u));
    const double bound = khat_ * std::pow(g_sup, 1.0 / (p_ - 1.0));
    if (grad > bound * (1.0 + 1e-12)) {
        g_guard_violations.fetch_add(1, std::memory_order_relaxed);
        throw InvariantViolation(fmt::format("gradient constant is stale ({}): |grad u| = {:.9g} exceeds "
                                             "khat * |g|^(1/(p-1)) = {:.9g}",
                                             context, grad, bound));
    }
}

std::size_t GradientGuard::checks() noexcept { return g_guard_checks.load(); }
std::size_t GradientGuard::violations() noexcept { return g_guard_violations.load(); }

}  // namespace plap
