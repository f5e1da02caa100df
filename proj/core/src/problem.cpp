#include "plap/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "plap/errors.hpp"

namespace plap {

namespace {

constexpr std::uint32_t bit(Var v) { return 1u << static_cast<unsigned>(v); }
constexpr std::uint32_t kParams = bit(Var::p) | bit(Var::q) | bit(Var::a) | bit(Var::b) | bit(Var::r);
constexpr std::uint32_t kSpace = bit(Var::x1) | bit(Var::x2);

void require_vars(const Expression& e, std::uint32_t allowed, std::string_view role) {
    const std::uint32_t extra = e.variables() & ~allowed;
    if (!extra) return;
    for (std::size_t i = 0; i < var_count; ++i) {
        if (extra & (1u << i))
            throw ConfigError(fmt::format("{} may not reference '{}'", role, var_name(static_cast<Var>(i))));
    }
}

}  // namespace

void ProblemSpec::check() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p) || !(p > 1.0)) throw ConfigError(fmt::format("need p > 1, got p = {}", p));
    if (!finite(q) || !(q > 1.0 && q < p)) throw ConfigError(fmt::format("need 1 < q < p, got q = {}, p = {}", q, p));
    if (!finite(a) || !(a > 0.0)) throw ConfigError(fmt::format("need a > 0, got {}", a));
    if (!finite(b) || !(b > 0.0)) throw ConfigError(fmt::format("need b > 0, got {}", b));
    require_vars(omega1, kSpace | kParams, "omega1");
    require_vars(omega2, kSpace | kParams, "omega2");
    require_vars(omega3, kSpace | kParams, "omega3");
    require_vars(h, kSpace | kParams | bit(Var::u), "h");
    require_vars(f, kSpace | kParams | bit(Var::u) | bit(Var::gnorm), "f");
    if (domain.size() != resolution.size())
        throw ConfigError(fmt::format("domain has {} axes but resolution has {}", domain.size(), resolution.size()));
    (void)make_grid();  // rejects degenerate intervals, too few nodes and bad axis counts
    if (domain.size() == 1) {
        if (omega1.uses(Var::x2) || omega2.uses(Var::x2) || omega3.uses(Var::x2) || h.uses(Var::x2) || f.uses(Var::x2))
            throw ConfigError("a one-dimensional problem may not reference 'x2'");
    }
}

Grid ProblemSpec::make_grid() const { return Grid::build(domain, resolution); }

Bindings ProblemSpec::parameter_bindings() const {
    Bindings bd;
    bd.set(Var::p, p).set(Var::q, q).set(Var::a, a).set(Var::b, b).set(Var::r, r());
    return bd;
}

WeightFields sample_weights(const ProblemSpec& spec, const Grid& grid) {
    WeightFields w{ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid)};
    Bindings bd = spec.parameter_bindings();
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const auto x = grid.position(k);
        bd.set(Var::x1, x[0]).set(Var::x2, x[1]);
        auto eval_at = [&](const Expression& e, const char* name) {
            try {
                return evaluate(e, bd);
            } catch (const EvalError& err) {
                throw EvalError(fmt::format("{} at x = ({}, {}): {}", name, x[0], x[1], err.what()));
            }
        };
        w.omega1[k] = eval_at(spec.omega1, "omega1");
        w.omega2[k] = eval_at(spec.omega2, "omega2");
        w.omega3[k] = eval_at(spec.omega3, "omega3");
        w.omega[k] = std::max({w.omega1[k], w.omega2[k], w.omega3[k]});
    }
    return w;
}

std::string HypothesisReport::summary() const {
    if (pass) return fmt::format("pass ({} checks)", checks);
    const auto& w = *worst;
    return fmt::format("fail: {} violated by {:.6g} at x = ({:.6g}, {:.6g}), u = {:.6g}, v = {:.6g}", w.check,
                       w.magnitude, w.x[0], w.x[1], w.u, w.v);
}

HypothesisReport validate_hypotheses(const ProblemSpec& spec, const Grid& grid, std::span<const double> u_samples,
                                     std::span<const double> v_samples) {
    if (u_samples.empty() || v_samples.empty()) throw ConfigError("hypothesis sampling needs nonempty sample lists");
    for (double u : u_samples)
        if (!(u > 0.0)) throw ConfigError("hypothesis u samples must be positive");

    HypothesisReport rep;
    auto record = [&](const char* check, double excess, const std::array<double, 2>& x, double u, double v) {
        ++rep.checks;
        if (excess <= 0.0) return;
        rep.pass = false;
        if (!rep.worst || excess > rep.worst->magnitude) rep.worst = HypothesisViolationRecord{check, excess, x, u, v};
    };
    auto slack = [](double a, double b) { return 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300}); };

    const WeightFields w = sample_weights(spec, grid);
    bool omega1_nonzero = false;
    Bindings bd = spec.parameter_bindings();
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const auto x = grid.position(k);
        const double w1 = w.omega1[k], w2 = w.omega2[k], w3 = w.omega3[k];
        record("omega1 >= 0", -w1, x, 0.0, 0.0);
        record("omega2 >= 0", -w2, x, 0.0, 0.0);
        record("omega3 >= 0", -w3, x, 0.0, 0.0);
        if (w1 > 0.0) omega1_nonzero = true;
        bd.set(Var::x1, x[0]).set(Var::x2, x[1]);
        for (double u : u_samples) {
            bd.set(Var::u, u);
            const double uq = std::pow(u, spec.q - 1.0);
            double hv;
            try {
                hv = evaluate(spec.h, bd);
            } catch (const EvalError& err) {
                throw EvalError(fmt::format("h at x = ({}, {}), u = {}: {}", x[0], x[1], u, err.what()));
            }
            const double lo = w1 * uq, hi = w2 * uq;
            record("omega1 u^(q-1) <= h", lo - hv - slack(lo, hv), x, u, 0.0);
            record("h <= omega2 u^(q-1)", hv - hi - slack(hi, hv), x, u, 0.0);
            const double ua = std::pow(u, spec.a);
            for (double v : v_samples) {
                bd.set(Var::gnorm, v);
                double fv;
                try {
                    fv = evaluate(spec.f, bd);
                } catch (const EvalError& err) {
                    throw EvalError(fmt::format("f at x = ({}, {}), u = {}, gnorm = {}: {}", x[0], x[1], u, v, err.what()));
                }
                const double cap = w3 * ua * std::pow(v, spec.b);
                record("f >= 0", -fv - slack(fv, 0.0), x, u, v);
                record("f <= omega3 u^a |v|^b", fv - cap - slack(fv, cap), x, u, v);
            }
        }
    }
    if (!omega1_nonzero) {
        rep.pass = false;
        rep.worst = HypothesisViolationRecord{"omega1 not identically zero", 0.0, {}, 0.0, 0.0};
    }
    return rep;
}

std::vector<double> default_u_samples(double u_max, std::size_t count) {
    const double lo = 1e-3;
    const double hi = std::max(u_max, lo);
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        s[i] = lo * std::pow(hi / lo, t);
    }
    return s;
}

std::vector<double> default_v_samples(double v_max, std::size_t count) {
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        s[i] = t * std::max(v_max, 0.0);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Problem file format

namespace {

struct Cursor {
    std::string_view line;
    int lineno;
    std::size_t pos = 0;

    int column() const { return static_cast<int>(pos) + 1; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, lineno, column()); }
    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    }
    bool at_end_or_comment() {
        skip_ws();
        return pos >= line.size() || line[pos] == '#';
    }
    void expect(char c) {
        skip_ws();
        if (pos >= line.size() || line[pos] != c) fail(fmt::format("expected '{}'", c));
        ++pos;
    }
    double number() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < line.size() && (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '.' ||
                                     line[pos] == '+' || line[pos] == '-')) {
            // stop at the 'x' separator of products like 33x33 unless it is an exponent marker
            if (line[pos] == 'x') break;
            ++pos;
        }
        const std::string tok(line.substr(start, pos - start));
        char* end = nullptr;
        const double v = tok.empty() ? 0.0 : std::strtod(tok.c_str(), &end);
        if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v)) {
            pos = start;
            fail(tok.empty() ? "expected a number" : fmt::format("malformed number '{}'", tok));
        }
        return v;
    }
};

}  // namespace

ProblemSpec parse_problem(std::string_view text) {
    static const std::array<std::string_view, 11> keys{"p",  "q",  "a",      "b",         "omega1", "omega2",
                                                       "omega3", "h", "f", "domain", "resolution"};
    ProblemSpec spec;
    std::map<std::string, int, std::less<>> seen;

    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        const std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        Cursor c{line, lineno};
        if (c.at_end_or_comment()) continue;

        const std::size_t kstart = c.pos;
        while (c.pos < line.size() && (std::isalnum(static_cast<unsigned char>(line[c.pos])) || line[c.pos] == '_')) ++c.pos;
        const std::string key(line.substr(kstart, c.pos - kstart));
        if (key.empty()) c.fail("expected a key");
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            c.pos = kstart;
            c.fail(fmt::format("unknown key '{}'", key));
        }
        if (auto it = seen.find(key); it != seen.end()) {
            c.pos = kstart;
            c.fail(fmt::format("duplicate key '{}' (first set on line {})", key, it->second));
        }
        seen.emplace(key, lineno);
        c.expect('=');
        c.skip_ws();

        if (key == "p" || key == "q" || key == "a" || key == "b") {
            const double v = c.number();
            (key == "p" ? spec.p : key == "q" ? spec.q : key == "a" ? spec.a : spec.b) = v;
        } else if (key == "domain") {
            spec.domain.clear();
            for (;;) {
                c.expect('[');
                const double lo = c.number();
                c.expect(',');
                const double hi = c.number();
                c.expect(']');
                spec.domain.push_back({lo, hi});
                c.skip_ws();
                if (c.pos < line.size() && line[c.pos] == 'x') {
                    ++c.pos;
                    continue;
                }
                break;
            }
        } else if (key == "resolution") {
            spec.resolution.clear();
            for (;;) {
                c.skip_ws();
                const std::size_t at = c.pos;
                const double v = c.number();
                if (v != std::floor(v) || v < 1 || v > 1e7) {
                    c.pos = at;
                    c.fail("resolution entries must be positive integers");
                }
                spec.resolution.push_back(static_cast<int>(v));
                c.skip_ws();
                if (c.pos < line.size() && line[c.pos] == 'x') {
                    ++c.pos;
                    continue;
                }
                break;
            }
        } else {
            if (c.pos >= line.size() || line[c.pos] != '"') c.fail("expression values must be double-quoted");
            const std::size_t open = c.pos;
            const std::size_t close = line.find('"', open + 1);
            if (close == std::string_view::npos) c.fail("unterminated string");
            const std::string_view src = line.substr(open + 1, close - open - 1);
            Expression e = parse("0");
            try {
                e = parse(src);
            } catch (const ParseError& err) {
                throw ParseError(fmt::format("in {}: {}", key, err.detail()), lineno,
                                 static_cast<int>(open) + 1 + err.column());
            }
            if (key == "omega1") spec.omega1 = e;
            else if (key == "omega2") spec.omega2 = e;
            else if (key == "omega3") spec.omega3 = e;
            else if (key == "h") spec.h = e;
            else spec.f = e;
            c.pos = close + 1;
        }
        if (!c.at_end_or_comment()) c.fail("unexpected text after value");
    }

    for (auto k : keys) {
        if (!seen.count(k)) throw ParseError(fmt::format("missing key '{}'", k), lineno, 1);
    }
    spec.check();
    return spec;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open problem file '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_problem(ss.str());
    } catch (const ParseError& err) {
        throw ParseError(fmt::format("{}: {}", path.string(), err.detail()), err.line(), err.column());
    }
}

std::string to_problem_text(const ProblemSpec& s) {
    std::string out;
    out += fmt::format("p = {}\nq = {}\na = {}\nb = {}\n", s.p, s.q, s.a, s.b);
    out += fmt::format("omega1 = \"{}\"\nomega2 = \"{}\"\nomega3 = \"{}\"\n", s.omega1.to_string(), s.omega2.to_string(),
                       s.omega3.to_string());
    out += fmt::format("h = \"{}\"\nf = \"{}\"\n", s.h.to_string(), s.f.to_string());
    out += "domain = ";
    for (std::size_t i = 0; i < s.domain.size(); ++i) out += fmt::format("{}[{}, {}]", i ? " x " : "", s.domain[i].lo, s.domain[i].hi);
    out += "\nresolution = ";
    for (std::size_t i = 0; i < s.resolution.size(); ++i) out += fmt::format("{}{}", i ? "x" : "", s.resolution[i]);
    out += '\n';
    return out;
}

}  // namespace plap
