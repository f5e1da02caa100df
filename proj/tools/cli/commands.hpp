#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace plap::cli {

/// Process exit codes. Every run ends with one of these.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kIo = 2,
    kInconclusive = 3,
    kOutOfRegion = 4,
    kBadProblem = 5,  // parse or configuration error
    kHypothesis = 6,
    kSolverFailure = 7,
    kInvariant = 8,
    kEvaluation = 9,
    kUsage = 64,
};

struct CommonArgs {
    std::filesystem::path spec;
    std::optional<int> n;  // nodes per axis, overrides the file
    double tol = 1e-8;     // nonlinear solver residual tolerance
};

struct RegionArgs : CommonArgs {
    std::array<double, 2> lambda_range{0.01, 10.0};
    std::array<double, 2> beta_range{0.01, 10.0};
    int samples = 20;  // per axis
    bool linear = false;
    std::filesystem::path out = "region.csv";
};

struct SolveArgs : CommonArgs {
    double lambda = 1.0;
    double beta = 1.0;
    int max_outer = 100;
    bool trace = false;
    std::filesystem::path out = "solution";  // writes <out>.report, <out>.csv, <out>_trace.csv
};

struct SweepArgs : RegionArgs {
    int max_outer = 100;
    int parallel = 1;
    SweepArgs() { out = "sweep.csv"; samples = 4; }
};

enum class TorsionWeight { unit, omega };

struct SpectralArgs : CommonArgs {
    std::optional<std::filesystem::path> out;  // field CSV
    TorsionWeight weight = TorsionWeight::unit;
};

int cmd_region(const RegionArgs& args, std::ostream& out, std::ostream& err);
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_eigen(const SpectralArgs& args, std::ostream& out, std::ostream& err);
int cmd_torsion(const SpectralArgs& args, std::ostream& out, std::ostream& err);

/// Parses the command line and dispatches. Reads PLAP_LOG for the log level.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Below this many nodes per axis the spectral commands warn about accuracy.
inline constexpr int kAccuracyFloor = 33;

}  // namespace plap::cli
