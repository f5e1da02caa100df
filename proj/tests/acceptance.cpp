// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli/commands.hpp"
#include "oracles.hpp"
#include "plap/constants.hpp"
#include "plap/errors.hpp"
#include "plap/problem.hpp"
#include "plap/scheme.hpp"
#include "plap/spectral.hpp"

using namespace plap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, std::string what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "" : "!! ") + std::move(what));
    }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Grid line(double lo, double hi, int n) {
    const Interval iv{lo, hi};
    return Grid::build(std::span(&iv, 1), std::span(&n, 1));
}

fs::path problem(const char* name) { return fs::path(PLAPLAB_PROBLEMS_DIR) / name; }

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "plaplab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome torsion_oracle() {
    Outcome o;
    for (double p : {1.5, 2.0, 3.0}) {
        for (double L : {1.0, 2.0}) {
            const auto t0 = Clock::now();
            const Grid g = line(0, L, 257);
            const double got = torsion_function(g, p, ScalarField(g, 1.0)).phi_sup;
            const double secs = seconds_since(t0);
            const double want = oracle::torsion_sup_1d(p, L);
            o.require(rel(got, want) <= 1e-2 && secs < 5.0,
                      fmt::format("p={} L={}: {:.6f} vs {:.6f} (rel {:.2e}, {:.3f} s)", p, L, got, want, rel(got, want), secs));
        }
    }
    return o;
}

Outcome eigen_oracle() {
    Outcome o;
    for (double p : {1.5, 2.0, 3.0}) {
        const Grid g = line(0, 1, 257);
        const auto w = ScalarField(g, 1.0);
        const double got = first_eigenpair(g, p, w).lambda1;
        const double want = oracle::eigen_1d(p);
        o.require(rel(got, want) <= 1e-2, fmt::format("p={}: lambda1 {:.6f} vs {:.6f} (rel {:.2e})", p, got, want, rel(got, want)));
        double worst = 0.0;
        for (double t : {0.5, 2.0, 4.0}) worst = std::max(worst, rel(first_eigenpair(g, p, t * w).lambda1, got / t));
        o.require(worst <= 1e-6, fmt::format("p={}: weight scaling worst rel {:.2e}", p, worst));
    }
    return o;
}

Outcome gradient_bound_suite() {
    Outcome o;
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> U(0.2, 1.5);
    for (double p : {1.5, 2.0, 3.0}) {
        const Grid g = line(0, 1, 129);
        ScalarField rhs(g);
        for (std::size_t k = 0; k < g.node_count(); ++k) rhs[k] = U(rng);
        const auto u = solve_plap_dirichlet(g, p, rhs);
        for (double t : {0.1, 10.0}) {
            const auto ut = solve_plap_dirichlet(g, p, t * rhs);
            const double err = sup_distance(ut, std::pow(t, 1 / (p - 1)) * u) / sup_norm(ut);
            o.require(err <= 1e-6, fmt::format("homogeneity p={} t={}: rel {:.2e}", p, t, err));
        }
    }
    for (double L : {1.0, 2.0}) {
        for (double p : {1.5, 2.0, 3.0}) {
            const Grid g = line(0, L, 129);
            const double bound = std::pow(L, 1 / (p - 1));
            double worst = 0.0;
            for (const auto& pr : default_probes(g)) {
                const auto u = solve_plap_dirichlet(g, p, pr.g);
                worst = std::max(worst, sup_norm(gradient(u)) / std::pow(sup_norm(pr.g), 1 / (p - 1)));
            }
            o.require(worst <= bound * (1 + 1e-6), fmt::format("probe ratio L={} p={}: {:.6f} <= {:.6f}", L, p, worst, bound));
        }
    }
    return o;
}

Outcome region_constants_suite() {
    Outcome o;
    std::mt19937 rng(103);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto logu = [&](double lo, double hi) { return std::exp(std::log(lo) + U(rng) * (std::log(hi) - std::log(lo))); };
    int disagreements = 0, inside = 0, drawn = 0;
    while (drawn < 500) {
        const double p = 1.2 + 2.8 * U(rng);
        const double q = 1.05 + (p - 1.1) * U(rng);
        const double r = p + 0.05 + 3.0 * U(rng);
        ConstantsBundle c;
        c.phi_sup = c.khat = c.omega_sup = c.gamma = c.L = 1.0;
        c.A = logu(0.1, 10);
        c.B = logu(0.1, 10);
        const Exponents e{p, q, r, 1.0};
        const double lambda = logu(1e-3, 1e3);
        double beta = logu(1e-3, 1e3);
        if (drawn % 2 == 0) {
            const double K = std::pow((r - p) / c.A, r - p) * std::pow((p - q) / c.B, p - q) / std::pow(r - q, r - q);
            beta = std::pow(K * logu(0.5, 2.0) / std::pow(lambda, r - p), 1 / (p - q));
        }
        if (beta < 1e-8 || beta > 1e8) continue;
        ++drawn;
        const double min_phi = oracle::golden_min([&](double t) { return phi_big(t, lambda, beta, c, e); }, 1e-100, 1e100);
        const bool verdict = region_classify(lambda, beta, c, e).in_region;
        inside += verdict;
        if (verdict != (min_phi <= 1.0) && std::abs(min_phi - 1.0) > 1e-9) ++disagreements;
    }
    o.require(disagreements == 0, fmt::format("500 random SUPER tuples: {} disagreements ({} in region)", disagreements, inside));

    ConstantsBundle unit;
    unit.phi_sup = unit.khat = unit.omega_sup = unit.gamma = unit.L = unit.A = unit.B = 1.0;
    const double K = region_constant_K(unit, {2, 1.5, 3, 1});
    const double want = std::pow(0.5, 0.5) / std::pow(1.5, 1.5);
    o.require(std::abs(K - want) <= 1e-12, fmt::format("K(2, 1.5, 3, 1, 1) = {:.12f} vs {:.12f}", K, want));
    const auto M = compute_M(1, 0.5, unit, {2, 1.5, 2, 1});
    o.require(M && std::abs(*M - 4.0) <= 1e-12, fmt::format("CRITICAL M = {}", M ? fmt::format("{:.12f}", *M) : "none"));
    return o;
}

void certify(Outcome& o, const std::string& tag, const SolveReport& rep, int max_outer) {
    const auto& c = rep.certificates;
    o.require(rep.converged && rep.outer_iters <= max_outer, fmt::format("{}: converged={} in {} outer steps", tag, rep.converged, rep.outer_iters));
    o.require(c.lower_bound_ok && c.upper_bound_ok && c.gradient_bound_ok,
              fmt::format("{}: bounds lower={} upper={} gradient={}", tag, c.lower_bound_ok, c.upper_bound_ok, c.gradient_bound_ok));
    o.require(c.pde_residual <= 1e-5 * c.residual_scale,
              fmt::format("{}: residual {:.3e} <= 1e-5 x {:.3e}", tag, c.pde_residual, c.residual_scale));
}

Outcome sub_pipeline() {
    Outcome o;
    const auto t0 = Clock::now();
    const ProblemSpec s = load_problem(problem("sub_case.plap"));
    o.require(s.p == 2.5 && s.q == 1.5 && s.a == 0.2 && s.b == 0.2 && s.resolution == std::vector<int>{129},
              "bundled SUB problem has p=2.5 q=1.5 a=b=0.2 n=129");
    const auto ctx = PipelineContext::prepare(s);
    const auto rep = outer_fixed_point(ctx, 1, 1);
    const double secs = seconds_since(t0);
    certify(o, "(1,1)", rep, 50);
    o.require(secs < 60.0, fmt::format("runtime {:.2f} s", secs));
    return o;
}

Outcome super_pipeline(const fs::path& work) {
    Outcome o;
    const ProblemSpec s = load_problem(problem("super_case.plap"));
    o.require(s.r() > s.p, fmt::format("bundled SUPER problem has r={} > p={}", s.r(), s.p));
    const auto ctx = PipelineContext::prepare(s);
    const Exponents e = Exponents::of(s);
    const double K = region_constant_K(ctx.constants.bundle, e);
    auto beta_for = [&](double level) { return std::pow(level, 1 / (s.p - s.q)); };  // at lambda = 1
    const double beta_half = beta_for(K / 2);
    const auto v = region_classify(1, beta_half, ctx.constants.bundle, e);
    o.require(v.in_region && std::abs(v.margin - K / 2) <= 1e-9 * K, fmt::format("K = {:.6f}, point (1, {:.6f}) at margin {:.6f}", K, beta_half, v.margin));
    certify(o, "margin K/2", outer_fixed_point(ctx, 1, beta_half), 100);

    const double beta_twice = beta_for(2 * K);
    const auto out = work / "gate";
    const int code = cli({"solve", "--spec", problem("super_case.plap").string(), "--lambda", "1", "--beta",
                          fmt::format("{}", beta_twice), "--out", out.string()});
    o.require(code == cli::kOutOfRegion, fmt::format("2K point (1, {:.6f}) exit code {}", beta_twice, code));
    o.require(!fs::exists(work / "gate.csv"), "no solution written for the rejected point");
    return o;
}

Outcome uniqueness_surrogate() {
    Outcome o;
    for (const auto& entry : fs::directory_iterator(PLAPLAB_PROBLEMS_DIR)) {
        if (entry.path().extension() != ".plap") continue;
        const ProblemSpec s = load_problem(entry.path());
        const auto ctx = PipelineContext::prepare(s);
        const Exponents e = Exponents::of(s);
        const auto& c = ctx.constants.bundle;
        double lambda = 1, beta = 1;
        switch (classify_case(e)) {
        case RegionCase::super:
            beta = std::pow(region_constant_K(c, e) / 2, 1 / (s.p - s.q));
            break;
        case RegionCase::critical:
            beta = 0.5 / c.B;
            break;
        case RegionCase::sub:
            break;
        }
        const auto rep = outer_fixed_point(ctx, lambda, beta);
        const auto& ce = rep.certificates;
        const std::string name = entry.path().filename().string();
        o.require(ce.two_sided_gap <= 1e-6 * rep.M, fmt::format("{}: two-sided gap {:.3e} <= 1e-6 M = {:.3e}", name, ce.two_sided_gap, 1e-6 * rep.M));
        o.require(std::abs(ce.picone_gap) <= 1e-8 * ce.picone_scale,
                  fmt::format("{}: Picone gap {:.3e} vs scale {:.3e}", name, ce.picone_gap, ce.picone_scale));
        o.require(ce.picone_max_integrand <= 0.0, fmt::format("{}: max nodal integrand {:.3e}", name, ce.picone_max_integrand));
    }
    return o;
}

Outcome degenerate_reduction() {
    Outcome o;
    ProblemSpec s;
    s.p = 2;
    s.q = 1.5;
    s.a = 0.2;
    s.b = 0.2;
    s.omega1 = parse("1 + x1");
    s.omega2 = parse("1 + x1");
    s.omega3 = parse("1");
    s.h = parse("(1 + x1) * u^(q-1)");
    s.f = parse("0");
    s.resolution = {129};
    const auto ctx = PipelineContext::prepare(s);
    for (double lambda : {0.5, 2.0}) {
        const auto rep = outer_fixed_point(ctx, lambda, 3.0);
        o.require(rep.converged && rep.outer_iters == 2 && rep.outer_trace[1] == 0.0,
                  fmt::format("lambda={}: {} outer steps, second step moved {:.3e}", lambda, rep.outer_iters,
                              rep.outer_trace.size() > 1 ? rep.outer_trace[1] : -1.0));
        const auto want = oracle::sublinear_monotone_1d(129, 1.0, lambda, s.q, [](double x) { return 1 + x; }, 2.0);
        double err = 0.0;
        for (std::size_t k = 0; k < want.size(); ++k) err = std::max(err, std::abs(rep.solution[k] - want[k]));
        o.require(err <= 1e-6, fmt::format("lambda={}: distance to direct monotone solve {:.3e}", lambda, err));
    }
    return o;
}

Outcome sweep_determinism(const fs::path& work) {
    Outcome o;
    for (const char* name : {"super_case.plap", "sub_case.plap"}) {
        std::string files[2];
        int i = 0;
        for (const char* par : {"1", "8"}) {
            const auto out = work / fmt::format("sweep_{}.csv", par);
            const int code = cli({"sweep", "--spec", problem(name).string(), "--samples", "4", "--lambda-range", "0.1", "10",
                                  "--beta-range", "0.1", "10", "--parallel", par, "--out", out.string()});
            o.require(code == cli::kOk, fmt::format("{} parallel={} exit {}", name, par, code));
            std::ifstream in(out, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            files[i++] = ss.str();
        }
        o.require(!files[0].empty() && files[0] == files[1], fmt::format("{}: parallel 1 and 8 outputs byte-identical", name));
    }
    return o;
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "plaplab_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"torsion oracle", torsion_oracle},
        {"eigen oracle", eigen_oracle},
        {"gradient bound suite", gradient_bound_suite},
        {"region constants suite", region_constants_suite},
        {"pipeline SUB case", sub_pipeline},
        {"pipeline SUPER case", [&] { return super_pipeline(work); }},
        {"uniqueness surrogate", uniqueness_surrogate},
        {"degenerate-f reduction", degenerate_reduction},
        {"sweep determinism", [&] { return sweep_determinism(work); }},
    };

    std::vector<std::pair<const char*, Outcome>> results;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, fmt::format("threw: {}", e.what()));
        }
        results.emplace_back(c.name, std::move(o));
    }
    // The runtime gradient bound must hold for every solve in the whole run.
    auto& guard = results[2].second;
    guard.require(GradientGuard::violations() == 0, fmt::format("runtime gradient bound: {} checks, {} violations",
                                                                GradientGuard::checks(), GradientGuard::violations()));

    int failed = 0;
    for (const auto& [name, o] : results) {
        fmt::print("{} {}\n", o.pass ? "PASS" : "FAIL", name);
        for (const auto& n : o.notes) fmt::print("     {}\n", n);
        failed += !o.pass;
    }
    fmt::print("{} of {} criteria passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
    return failed == 0 ? 0 : 1;
}
