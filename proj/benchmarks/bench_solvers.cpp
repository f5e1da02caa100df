#include <benchmark/benchmark.h>

#include "plap/plap_solver.hpp"
#include "plap/spectral.hpp"

using namespace plap;

namespace {

Grid box(int n, int dim) {
    const Interval iv{0.0, 1.0};
    const std::vector<Interval> ivs(dim, iv);
    const std::vector<int> ns(dim, n);
    return Grid::build(ivs, ns);
}

void solve_1d(benchmark::State& state, double p) {
    const Grid g = box(static_cast<int>(state.range(0)), 1);
    const ScalarField rhs(g, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_plap_dirichlet(g, p, rhs));
}

void BM_Solve1D_p2(benchmark::State& s) { solve_1d(s, 2.0); }
void BM_Solve1D_p3(benchmark::State& s) { solve_1d(s, 3.0); }

void BM_Solve2D(benchmark::State& state) {
    const Grid g = box(static_cast<int>(state.range(0)), 2);
    const ScalarField rhs(g, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_plap_dirichlet(g, 2.5, rhs));
}

void BM_Eigen1D(benchmark::State& state) {
    const Grid g = box(static_cast<int>(state.range(0)), 1);
    const ScalarField w(g, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(first_eigenpair(g, 2.5, w).lambda1);
}

}  // namespace

BENCHMARK(BM_Solve1D_p2)->Arg(65)->Arg(257)->Arg(1025)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Solve1D_p3)->Arg(65)->Arg(257)->Arg(1025)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Solve2D)->Arg(17)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Eigen1D)->Arg(129)->Arg(257)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
