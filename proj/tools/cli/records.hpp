#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plap/constants.hpp"

namespace plap::cli {

/// One row of region.csv: lambda,beta,case,in_region,margin,M
struct RegionRow {
    double lambda = 0.0;
    double beta = 0.0;
    RegionCase case_tag = RegionCase::sub;
    bool in_region = false;
    double margin = 0.0;
    std::optional<double> M;

    bool operator==(const RegionRow&) const = default;
};

/// One row of sweep.csv: lambda,beta,case,in_region,margin,M,status,outer_iters,pde_residual
struct SweepRow {
    double lambda = 0.0;
    double beta = 0.0;
    RegionCase case_tag = RegionCase::sub;
    bool in_region = false;
    double margin = 0.0;
    std::optional<double> M;
    std::string status;  // converged | inconclusive | out_of_region | error:<kind>
    int outer_iters = 0;
    std::optional<double> pde_residual;

    bool operator==(const SweepRow&) const = default;
};

void write_region_csv(std::ostream& os, const std::vector<RegionRow>& rows);
std::vector<RegionRow> read_region_csv(std::istream& is);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

/// Shortest text that parses back to the same double ("inf" for infinity).
std::string format_real(double v);

RegionCase parse_case(const std::string& text);

}  // namespace plap::cli
