#include "cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/records.hpp"
#include "plap/constants.hpp"
#include "plap/errors.hpp"
#include "plap/problem.hpp"
#include "plap/scheme.hpp"
#include "plap/spectral.hpp"

namespace plap::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
public:
    using Error::Error;
};

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    auto fail = [&](const char* kind, const std::exception& e, int code) {
        err << fmt::format("plaplab: {}: {}\n", kind, e.what());
        return code;
    };
    try {
        return fn();
    } catch (const UsageError& e) {
        return fail("usage", e, kUsage);
    } catch (const IoError& e) {
        return fail("I/O error", e, kIo);
    } catch (const OutOfRegion& e) {
        return fail("out of region", e, kOutOfRegion);
    } catch (const ParseError& e) {
        return fail("parse error", e, kBadProblem);
    } catch (const ConfigError& e) {
        return fail("invalid problem", e, kBadProblem);
    } catch (const HypothesisViolation& e) {
        return fail("hypothesis violated", e, kHypothesis);
    } catch (const SolverError& e) {
        return fail("solver failure", e, kSolverFailure);
    } catch (const InvariantViolation& e) {
        return fail("invariant violated", e, kInvariant);
    } catch (const EvalError& e) {
        return fail("evaluation error", e, kEvaluation);
    } catch (const std::exception& e) {
        return fail("internal error", e, kInternal);
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path);
    if (!os) throw IoError(fmt::format("cannot write '{}'", path.string()));
    return os;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
    return out.parent_path() / (out.stem().string() + suffix);
}

fs::path with_ext(const fs::path& out, const std::string& ext) {
    return out.parent_path() / (out.filename().string() + ext);
}

ProblemSpec load(const CommonArgs& args) {
    ProblemSpec spec = load_problem(args.spec);
    if (args.n) {
        if (*args.n < 3) throw UsageError(fmt::format("--n must be at least 3, got {}", *args.n));
        spec.resolution.assign(spec.domain.size(), *args.n);
    }
    spec.check();
    return spec;
}

SolveOptions solve_options(const CommonArgs& args) {
    SolveOptions o;
    o.tol_residual = args.tol;
    o.check();
    return o;
}

std::vector<double> axis_samples(std::array<double, 2> range, int count, bool linear, const char* name) {
    const auto [lo, hi] = range;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
        throw UsageError(fmt::format("{} range must satisfy 0 < lo <= hi, got [{}, {}]", name, lo, hi));
    if (count < 1) throw UsageError(fmt::format("--samples must be positive, got {}", count));
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        v[static_cast<std::size_t>(i)] = linear ? lo + t * (hi - lo)
                                                  : std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)));
    }
    v.front() = lo;
    v.back() = count == 1 ? lo : hi;
    return v;
}

void warn_resolution(const Grid& grid, std::ostream& err) {
    for (int d = 0; d < grid.dimension(); ++d) {
        if (grid.count(d) < kAccuracyFloor) {
            err << fmt::format("plaplab: warning: {} nodes on axis {} is below the accuracy floor of {}; "
                               "expect large discretisation error\n",
                               grid.count(d), d + 1, kAccuracyFloor);
            return;
        }
    }
}

void write_field_csv(const fs::path& path, const ScalarField& u, const char* name, bool with_gradient) {
    auto os = open_out(path);
    const Grid& g = u.grid();
    const bool two_d = g.dimension() == 2;
    os << (two_d ? "x1,x2," : "x1,") << name << (with_gradient ? ",gradnorm\n" : "\n");
    const ScalarField gn = gradient(u).magnitude();
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto x = g.position(k);
        if (two_d)
            os << format_real(x[0]) << ',' << format_real(x[1]) << ',';
        else
            os << format_real(x[0]) << ',';
        os << format_real(u[k]);
        if (with_gradient) os << ',' << format_real(gn[k]);
        os << '\n';
    }
}

void check_hypotheses(const ProblemSpec& spec, const Grid& grid, double M, double gamma) {
    const HypothesisReport hr =
        validate_hypotheses(spec, grid, default_u_samples(std::max(M, 1e-2)), default_v_samples(gamma * M));
    if (!hr.pass) throw HypothesisViolation(hr.summary());
    spdlog::debug("hypotheses hold on {} sampled checks", hr.checks);
}

void log_constants(const ConstantsBundle& c) {
    spdlog::info("constants: phi_sup={:.6g} khat={:.6g} omega_sup={:.6g} gamma={:.6g} A={:.6g} B={:.6g} L={:.6g}",
                 c.phi_sup, c.khat, c.omega_sup, c.gamma, c.A, c.B, c.L);
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

struct ReportWriter {
    std::ofstream os;
    void kv(const char* key, const std::string& value) { os << key << " = " << value << '\n'; }
    void kv(const char* key, double value) { kv(key, format_real(value)); }
    void kv(const char* key, int value) { kv(key, std::to_string(value)); }
    void kv(const char* key, bool value) { kv(key, std::string(yes_no(value))); }
};

void report_header(ReportWriter& w, const std::string& status, int code, const SolveArgs& a, const ConstantsBundle& c,
                   const RegionVerdict& v) {
    w.kv("status", status);
    w.kv("exit_code", code);
    w.kv("spec", a.spec.string());
    w.kv("lambda", a.lambda);
    w.kv("beta", a.beta);
    w.kv("case", std::string(case_name(v.case_tag)));
    w.kv("in_region", v.in_region);
    w.kv("margin", v.margin);
    if (v.K) w.kv("K", *v.K);
    if (v.M) w.kv("M", *v.M);
    w.kv("phi_sup", c.phi_sup);
    w.kv("khat", c.khat);
    w.kv("omega_sup", c.omega_sup);
    w.kv("gamma", c.gamma);
    w.kv("A", c.A);
    w.kv("B", c.B);
    w.kv("L", c.L);
}

std::string error_kind(std::exception_ptr ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const HypothesisViolation&) {
        return "error:hypothesis";
    } catch (const SolverError&) {
        return "error:solver";
    } catch (const InvariantViolation&) {
        return "error:invariant";
    } catch (const EvalError&) {
        return "error:evaluation";
    } catch (const ConfigError&) {
        return "error:config";
    } catch (...) {
        return "error:internal";
    }
}

}  // namespace

int cmd_region(const RegionArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto lambdas = axis_samples(args.lambda_range, args.samples, args.linear, "lambda");
        const auto betas = axis_samples(args.beta_range, args.samples, args.linear, "beta");
        const ProblemSpec spec = load(args);
        const Grid grid = spec.make_grid();
        const Exponents ex = Exponents::of(spec);
        const ConstantsComputation cc = compute_constants(spec, grid, solve_options(args));
        log_constants(cc.bundle);

        std::vector<RegionRow> rows;
        rows.reserve(lambdas.size() * betas.size());
        std::size_t inside = 0;
        for (double l : lambdas) {
            for (double b : betas) {
                const RegionVerdict v = region_classify(l, b, cc.bundle, ex);
                rows.push_back({l, b, v.case_tag, v.in_region, v.margin, v.M});
                inside += v.in_region ? 1 : 0;
            }
        }
        auto os = open_out(args.out);
        write_region_csv(os, rows);

        const RegionCase rc = classify_case(ex);
        if (rc != RegionCase::sub) {
            const fs::path bpath = sibling(args.out, "_boundary.csv");
            auto bs = open_out(bpath);
            bs << "lambda,beta\n";
            for (const auto& [l, b] : region_boundary(lambdas, cc.bundle, ex))
                bs << format_real(l) << ',' << format_real(b) << '\n';
            out << fmt::format("boundary: {}\n", bpath.string());
        }
        out << fmt::format("{} case: {} of {} points in region -> {}\n", case_name(rc), inside, rows.size(),
                           args.out.string());
        return kOk;
    });
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (args.max_outer < 1) throw UsageError("--max-outer must be at least 1");
        const ProblemSpec spec = load(args);
        const Grid grid = spec.make_grid();
        const SolveOptions sopts = solve_options(args);
        const Exponents ex = Exponents::of(spec);

        ConstantsComputation cc = compute_constants(spec, grid, sopts);
        log_constants(cc.bundle);
        const RegionVerdict verdict = region_classify(args.lambda, args.beta, cc.bundle, ex);
        if (!verdict.in_region) {
            ReportWriter w{open_out(with_ext(args.out, ".report"))};
            report_header(w, "out_of_region", kOutOfRegion, args, cc.bundle, verdict);
            throw OutOfRegion(fmt::format("(lambda, beta) = ({}, {}) is outside the admissible region ({} case, margin {:.6g})",
                                          args.lambda, args.beta, case_name(verdict.case_tag), verdict.margin));
        }
        check_hypotheses(spec, grid, *verdict.M, cc.bundle.gamma);

        EigenPair eig = first_eigenpair(grid, spec.p, cc.weights.omega1, sopts);
        spdlog::info("lambda1={:.10g} (Rayleigh {:.10g}, {} iterations)", eig.lambda1, eig.rayleigh, eig.iterations);
        const PipelineContext ctx{spec, grid, std::move(cc), std::move(eig)};

        OuterOptions oopts;
        oopts.max_outer = args.max_outer;
        oopts.inner.solve = sopts;
        const SolveReport rep = outer_fixed_point(ctx, args.lambda, args.beta, oopts);
        const int code = rep.converged ? kOk : kInconclusive;
        const char* status = rep.converged ? "converged" : "inconclusive";

        ReportWriter w{open_out(with_ext(args.out, ".report"))};
        report_header(w, status, code, args, ctx.constants.bundle, rep.verdict);
        w.kv("lambda1", ctx.eigen.lambda1);
        w.kv("epsilon", rep.epsilon);
        w.kv("outer_iters", rep.outer_iters);
        const Certificates& ce = rep.certificates;
        w.kv("lower_bound_ok", ce.lower_bound_ok);
        w.kv("upper_bound_ok", ce.upper_bound_ok);
        w.kv("gradient_bound_ok", ce.gradient_bound_ok);
        w.kv("pde_residual", ce.pde_residual);
        w.kv("residual_scale", ce.residual_scale);
        w.kv("picone_gap", ce.picone_gap);
        w.kv("picone_scale", ce.picone_scale);
        w.kv("picone_max_integrand", ce.picone_max_integrand);
        w.kv("two_sided_gap", ce.two_sided_gap);
        w.kv("u_sup", sup_norm(rep.solution));
        if (!rep.note.empty()) w.kv("note", rep.note);

        write_field_csv(with_ext(args.out, ".csv"), rep.solution, "u", true);
        if (args.trace) {
            auto ts = open_out(sibling(with_ext(args.out, ".csv"), "_trace.csv"));
            ts << "outer_iter,c1_change,inner_iters\n";
            for (std::size_t k = 0; k < rep.outer_trace.size(); ++k)
                ts << k + 1 << ',' << format_real(rep.outer_trace[k]) << ',' << rep.inner_iters[k] << '\n';
        }
        out << fmt::format("{}: {} outer steps, residual {:.3e} (scale {:.3e}) -> {}\n", status, rep.outer_iters,
                           ce.pde_residual, ce.residual_scale, with_ext(args.out, ".report").string());
        if (!rep.converged) err << fmt::format("plaplab: inconclusive: {}\n", rep.note);
        return code;
    });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (args.parallel < 1) throw UsageError("--parallel must be at least 1");
        if (args.max_outer < 1) throw UsageError("--max-outer must be at least 1");
        const auto lambdas = axis_samples(args.lambda_range, args.samples, args.linear, "lambda");
        const auto betas = axis_samples(args.beta_range, args.samples, args.linear, "beta");
        const ProblemSpec spec = load(args);
        const SolveOptions sopts = solve_options(args);
        const Exponents ex = Exponents::of(spec);

        // (λ, β)-independent stages run once and are shared read-only by the workers.
        const PipelineContext ctx = PipelineContext::prepare(spec, sopts);
        log_constants(ctx.constants.bundle);

        std::vector<std::pair<double, double>> points;
        for (double l : lambdas)
            for (double b : betas) points.emplace_back(l, b);
        std::vector<SweepRow> rows(points.size());
        std::vector<double> seconds(points.size(), 0.0);

        OuterOptions oopts;
        oopts.max_outer = args.max_outer;
        oopts.inner.solve = sopts;

        auto run_point = [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto [l, b] = points[i];
            SweepRow& row = rows[i];
            row.lambda = l;
            row.beta = b;
            try {
                const RegionVerdict v = region_classify(l, b, ctx.constants.bundle, ex);
                row.case_tag = v.case_tag;
                row.in_region = v.in_region;
                row.margin = v.margin;
                row.M = v.M;
                if (!v.in_region) {
                    row.status = "out_of_region";
                } else {
                    check_hypotheses(spec, ctx.grid, *v.M, ctx.constants.bundle.gamma);
                    const SolveReport rep = outer_fixed_point(ctx, l, b, oopts);
                    row.status = rep.converged ? "converged" : "inconclusive";
                    row.outer_iters = rep.outer_iters;
                    row.pde_residual = rep.certificates.pde_residual;
                }
            } catch (...) {
                row.status = error_kind(std::current_exception());
                spdlog::warn("sweep point ({}, {}) failed: {}", l, b, row.status);
            }
            seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < points.size(); i = next++) run_point(i);
        };
        const auto nthreads = static_cast<std::size_t>(std::min<int>(args.parallel, static_cast<int>(points.size())));
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();

        auto os = open_out(args.out);
        write_sweep_csv(os, rows);
        // Wall times vary run to run, so they live beside the deterministic table.
        auto ts = open_out(sibling(args.out, "_timing.csv"));
        ts << "lambda,beta,wall_seconds\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
            ts << format_real(rows[i].lambda) << ',' << format_real(rows[i].beta) << ',' << fmt::format("{:.6f}", seconds[i])
               << '\n';

        std::size_t converged = 0, inside = 0;
        for (const auto& r : rows) {
            converged += r.status == "converged";
            inside += r.in_region;
        }
        out << fmt::format("{} points, {} in region, {} converged -> {}\n", rows.size(), inside, converged,
                           args.out.string());
        return kOk;
    });
}

int cmd_eigen(const SpectralArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemSpec spec = load(args);
        const Grid grid = spec.make_grid();
        warn_resolution(grid, err);
        const WeightFields w = sample_weights(spec, grid);
        const EigenPair eig = first_eigenpair(grid, spec.p, w.omega1, solve_options(args));
        spdlog::info("Rayleigh quotient {:.10g}, residual {:.3e}, {} iterations", eig.rayleigh, eig.residual,
                     eig.iterations);
        if (args.out) write_field_csv(*args.out, eig.u1, "u1", false);
        out << fmt::format("{:.12g}\n", eig.lambda1);
        return kOk;
    });
}

int cmd_torsion(const SpectralArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemSpec spec = load(args);
        const Grid grid = spec.make_grid();
        warn_resolution(grid, err);
        const ScalarField weight =
            args.weight == TorsionWeight::unit ? ScalarField(grid, 1.0) : sample_weights(spec, grid).omega;
        const TorsionResult t = torsion_function(grid, spec.p, weight, solve_options(args));
        if (args.out) write_field_csv(*args.out, t.phi, "phi", false);
        out << fmt::format("{:.12g}\n", t.phi_sup);
        return kOk;
    });
}

namespace {

void configure_logging() {
    auto logger = spdlog::get("plaplab");
    if (!logger) {
        logger = spdlog::stderr_color_mt("plaplab");
        spdlog::set_default_logger(logger);
    }
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("PLAP_LOG")) {
        const std::string v = env;
        if (v == "error")
            level = spdlog::level::err;
        else if (v == "info")
            level = spdlog::level::info;
        else if (v == "debug")
            level = spdlog::level::debug;
    }
    spdlog::set_level(level);
}

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--spec", a.spec, "Problem file")->required();
    sub->add_option("--n", a.n, "Nodes per axis (overrides the problem file)");
    sub->add_option("--tol", a.tol, "Nonlinear solver residual tolerance");
}

void add_ranges(CLI::App* sub, RegionArgs& a) {
    sub->add_option("--lambda-range", a.lambda_range, "lambda sample range LO HI");
    sub->add_option("--beta-range", a.beta_range, "beta sample range LO HI");
    sub->add_option("--samples", a.samples, "Samples per axis");
    sub->add_flag("--linear", a.linear, "Linear instead of logarithmic spacing");
    sub->add_option("--out", a.out, "Output CSV");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    configure_logging();
    CLI::App app{"Positive solutions of p-Laplacian problems with gradient-dependent terms", "plaplab"};
    app.require_subcommand(1);

    RegionArgs region;
    auto* c_region = app.add_subcommand("region", "Classify a grid of (lambda, beta) points");
    add_common(c_region, region);
    add_ranges(c_region, region);

    SolveArgs solve;
    auto* c_solve = app.add_subcommand("solve", "Solve at one (lambda, beta) and certify the result");
    add_common(c_solve, solve);
    c_solve->add_option("--lambda", solve.lambda, "lambda")->required();
    c_solve->add_option("--beta", solve.beta, "beta")->required();
    c_solve->add_option("--max-outer", solve.max_outer, "Outer iteration cap");
    c_solve->add_flag("--trace", solve.trace, "Write the outer iteration trace");
    c_solve->add_option("--out", solve.out, "Output prefix");

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("sweep", "Solve on a grid of (lambda, beta) points");
    add_common(c_sweep, sweep);
    add_ranges(c_sweep, sweep);
    c_sweep->add_option("--max-outer", sweep.max_outer, "Outer iteration cap per point");
    c_sweep->add_option("--parallel", sweep.parallel, "Worker threads");

    SpectralArgs eigen;
    auto* c_eigen = app.add_subcommand("eigen", "Print the first eigenvalue for the weight omega1");
    add_common(c_eigen, eigen);
    c_eigen->add_option("--out", eigen.out, "Eigenfunction CSV");

    SpectralArgs torsion;
    auto* c_torsion = app.add_subcommand("torsion", "Print the sup-norm of the torsion function");
    add_common(c_torsion, torsion);
    c_torsion->add_option("--out", torsion.out, "Torsion function CSV");
    const std::map<std::string, TorsionWeight> weights{{"unit", TorsionWeight::unit}, {"omega", TorsionWeight::omega}};
    c_torsion->add_option("--weight", torsion.weight, "Right-hand side: unit or omega")
        ->transform(CLI::CheckedTransformer(weights, CLI::ignore_case));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << fmt::format("plaplab: usage: {}\n", e.what());
        if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front())
            err << sub->help();
        return kUsage;
    }

    if (c_region->parsed()) return cmd_region(region, out, err);
    if (c_solve->parsed()) return cmd_solve(solve, out, err);
    if (c_sweep->parsed()) return cmd_sweep(sweep, out, err);
    if (c_eigen->parsed()) return cmd_eigen(eigen, out, err);
    return cmd_torsion(torsion, out, err);
}

}  // namespace plap::cli
