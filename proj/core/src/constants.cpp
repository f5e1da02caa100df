#include "plap/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace plap {

ConstantsBundle ConstantsBundle::assemble(double phi_sup, double khat, double omega_sup, double L, const Exponents& e) {
    for (double v : {phi_sup, khat, omega_sup, L})
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(fmt::format("constants need positive finite inputs, got phi_sup = {}, khat = {}, "
                                          "omega_sup = {}, L = {}",
                                          phi_sup, khat, omega_sup, L));
    ConstantsBundle c;
    c.phi_sup = phi_sup;
    c.khat = khat;
    c.omega_sup = omega_sup;
    c.L = L;
    c.gamma = khat * std::pow(omega_sup, 1.0 / (e.p - 1.0)) / phi_sup;
    c.A = std::pow(phi_sup, e.p - 1.0);
    c.B = std::pow(khat, e.b) * std::pow(phi_sup, e.p - 1.0 - e.b) * std::pow(omega_sup, e.b / (e.p - 1.0));
    return c;
}

bool ConstantsBundle::consistent(const Exponents& e, double rel) const {
    for (double v : {phi_sup, khat, omega_sup, gamma, A, B, L})
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    const auto fresh = assemble(phi_sup, khat, omega_sup, L, e);
    auto close = [rel](double a, double b) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); };
    return close(fresh.gamma, gamma) && close(fresh.A, A) && close(fresh.B, B);
}

ConstantsComputation compute_constants(const ProblemSpec& spec, const Grid& grid, const SolveOptions& opts) {
    spec.check();
    const Exponents e = Exponents::of(spec);
    WeightFields w = sample_weights(spec, grid);

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const SolverError& err) {
            throw SolverError(fmt::format("{}: {}", name, err.what()), err.history());
        } catch (const ConfigError& err) {
            throw ConfigError(fmt::format("{}: {}", name, err.what()));
        }
    };

    TorsionResult tor = stage("torsion with weight omega", [&] { return torsion_function(grid, spec.p, w.omega, opts); });
    TorsionResult unit =
        stage("unit torsion", [&] { return torsion_function(grid, spec.p, ScalarField(grid, 1.0), opts); });

    std::vector<Probe> probes = default_probes(grid);
    const std::pair<const char*, const ScalarField*> weights[] = {
        {"omega1", &w.omega1}, {"omega2", &w.omega2}, {"omega3", &w.omega3}};
    for (const auto& [name, field] : weights)
        if (sup_norm(*field) > 0.0) probes.push_back({name, *field});
    probes.push_back({"omega", w.omega});
    GradConstantEstimate grad =
        stage("gradient constant", [&] { return estimate_grad_constant(grid, spec.p, probes, opts); });

    ConstantsBundle c = ConstantsBundle::assemble(tor.phi_sup, grad.khat, sup_norm(w.omega), unit.phi_sup, e);
    return {c, std::move(w), std::move(tor), std::move(unit), std::move(grad)};
}

std::string_view case_name(RegionCase c) noexcept {
    switch (c) {
        case RegionCase::super: return "SUPER";
        case RegionCase::critical: return "CRITICAL";
        case RegionCase::sub: return "SUB";
    }
    return "?";
}

RegionCase classify_case(const Exponents& e) noexcept {
    if (std::abs(e.r - e.p) <= 1e-12 * std::max(1.0, e.p)) return RegionCase::critical;
    return e.r > e.p ? RegionCase::super : RegionCase::sub;
}

double phi_big(double t, double lambda, double beta, const ConstantsBundle& c, const Exponents& e) {
    if (!(t > 0.0)) throw ConfigError(fmt::format("Phi needs t > 0, got {}", t));
    return lambda * c.A * std::pow(t, e.q - e.p) + beta * c.B * std::pow(t, e.r - e.p);
}

double region_constant_K(const ConstantsBundle& c, const Exponents& e) {
    const double rp = e.r - e.p, pq = e.p - e.q, rq = e.r - e.q;
    return std::pow(rp / c.A, rp) * std::pow(pq / c.B, pq) / std::pow(rq, rq);
}

namespace {

void require_positive(double lambda, double beta) {
    if (!(lambda > 0.0) || !(beta > 0.0) || !std::isfinite(lambda) || !std::isfinite(beta))
        throw ConfigError(fmt::format("lambda and beta must be positive, got ({}, {})", lambda, beta));
}

// Φ is strictly decreasing in the SUB case; find Φ(M) = 1.
double solve_unit_level(double lambda, double beta, const ConstantsBundle& c, const Exponents& e) {
    auto phi = [&](double t) { return phi_big(t, lambda, beta, c, e); };
    double lo = 1.0, hi = 1.0;
    if (phi(1.0) > 1.0) {
        while (phi(hi) > 1.0) {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while (phi(lo) <= 1.0) {
            hi = lo;
            lo *= 0.5;
        }
    }
    // invariant: phi(lo) > 1 >= phi(hi)
    for (int it = 0; it < 400 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (phi(mid) > 1.0) lo = mid;
        else hi = mid;
    }
    return hi;
}

}  // namespace

std::optional<double> compute_M(double lambda, double beta, const ConstantsBundle& c, const Exponents& e) {
    require_positive(lambda, beta);
    switch (classify_case(e)) {
        case RegionCase::super: {
            const double M = std::pow(lambda * c.A * (e.p - e.q) / (beta * c.B * (e.r - e.p)), 1.0 / (e.r - e.q));
            if (phi_big(M, lambda, beta, c, e) <= 1.0 + 1e-10) return M;
            return std::nullopt;
        }
        case RegionCase::critical: {
            if (!(beta * c.B < 1.0)) return std::nullopt;
            return std::pow(lambda * c.A / (1.0 - beta * c.B), 1.0 / (e.p - e.q));
        }
        case RegionCase::sub:
            return solve_unit_level(lambda, beta, c, e);
    }
    return std::nullopt;
}

RegionVerdict region_classify(double lambda, double beta, const ConstantsBundle& c, const Exponents& e) {
    require_positive(lambda, beta);
    RegionVerdict v;
    v.case_tag = classify_case(e);
    switch (v.case_tag) {
        case RegionCase::super: {
            const double K = region_constant_K(c, e);
            v.K = K;
            v.margin = K - std::pow(lambda, e.r - e.p) * std::pow(beta, e.p - e.q);
            v.in_region = v.margin >= 0.0;
            break;
        }
        case RegionCase::critical:
            v.margin = 1.0 / c.B - beta;
            v.in_region = beta < 1.0 / c.B;
            break;
        case RegionCase::sub:
            v.margin = std::numeric_limits<double>::infinity();
            v.in_region = true;
            break;
    }
    if (v.in_region) {
        v.M = compute_M(lambda, beta, c, e);
        if (!v.M) v.in_region = false;  // Φ(M) check disagrees with the closed form at round-off level
    }
    return v;
}

std::vector<std::pair<double, double>> region_boundary(const std::vector<double>& lambdas, const ConstantsBundle& c,
                                                       const Exponents& e) {
    std::vector<std::pair<double, double>> out;
    const RegionCase rc = classify_case(e);
    if (rc == RegionCase::sub) return out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        double beta = rc == RegionCase::super
                          ? std::pow(region_constant_K(c, e) / std::pow(lambda, e.r - e.p), 1.0 / (e.p - e.q))
                          : std::nextafter(1.0 / c.B, 0.0);
        // step down past round-off so the emitted pair is itself admissible
        for (int guard = 0; guard < 64 && !region_classify(lambda, beta, c, e).in_region; ++guard)
            beta = std::nextafter(beta, 0.0);
        out.emplace_back(lambda, beta);
    }
    return out;
}

}  // namespace plap
