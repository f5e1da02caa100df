#include "cli/records.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "plap/errors.hpp"

namespace plap::cli {

namespace {

constexpr const char* kRegionHeader = "lambda,beta,case,in_region,margin,M";
constexpr const char* kSweepHeader = "lambda,beta,case,in_region,margin,M,status,outer_iters,pde_residual";

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_real(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ParseError(fmt::format("bad number '{}'", s), 1, 1);
    return v;
}

std::optional<double> to_opt_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return to_real(s);
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

void expect_header(std::istream& is, const char* header) {
    std::string line;
    if (!std::getline(is, line) || line != header)
        throw ParseError(fmt::format("expected CSV header '{}'", header), 1, 1);
}

}  // namespace

std::string format_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

RegionCase parse_case(const std::string& text) {
    if (text == "SUPER") return RegionCase::super;
    if (text == "CRITICAL") return RegionCase::critical;
    if (text == "SUB") return RegionCase::sub;
    throw ParseError(fmt::format("unknown case '{}'", text), 1, 1);
}

void write_region_csv(std::ostream& os, const std::vector<RegionRow>& rows) {
    os << kRegionHeader << '\n';
    for (const auto& r : rows)
        os << fmt::format("{},{},{},{},{},{}\n", format_real(r.lambda), format_real(r.beta), case_name(r.case_tag),
                          r.in_region ? 1 : 0, format_real(r.margin), opt_real(r.M));
}

std::vector<RegionRow> read_region_csv(std::istream& is) {
    expect_header(is, kRegionHeader);
    std::vector<RegionRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        const auto c = split(line);
        if (c.size() != 6) throw ParseError(fmt::format("region row has {} cells", c.size()), static_cast<int>(rows.size()) + 2, 1);
        rows.push_back({to_real(c[0]), to_real(c[1]), parse_case(c[2]), c[3] == "1", to_real(c[4]), to_opt_real(c[5])});
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kSweepHeader << '\n';
    for (const auto& r : rows)
        os << fmt::format("{},{},{},{},{},{},{},{},{}\n", format_real(r.lambda), format_real(r.beta), case_name(r.case_tag),
                          r.in_region ? 1 : 0, format_real(r.margin), opt_real(r.M), r.status, r.outer_iters,
                          opt_real(r.pde_residual));
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    expect_header(is, kSweepHeader);
    std::vector<SweepRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        const auto c = split(line);
        if (c.size() != 9) throw ParseError(fmt::format("sweep row has {} cells", c.size()), static_cast<int>(rows.size()) + 2, 1);
        rows.push_back({to_real(c[0]), to_real(c[1]), parse_case(c[2]), c[3] == "1", to_real(c[4]), to_opt_real(c[5]), c[6],
                        std::stoi(c[7]), to_opt_real(c[8])});
    }
    return rows;
}

}  // namespace plap::cli
