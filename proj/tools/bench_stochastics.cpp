// Serial versus OpenMP throughput of the Monte Carlo kernels. Both paths
// draw from per-point sub-seeds, so they produce bit-identical output; the
// benchmark quantifies what the parallel path buys.

#include <benchmark/benchmark.h>

#include "entconc/stochastics.hpp"

using namespace entconc;

namespace {

NoisyChain make_chain() {
    const double s = 0.7071067811865476;
    PreparedPair p12{prepare_pair(PairSpec{s, s, mode("1"), mode("2")}),
                     brewster_window(0.98, 0.73, 1).jones.m};
    PreparedPair p34{prepare_pair(PairSpec{s, s, mode("3"), mode("4")}),
                     brewster_window(0.98, 0.73, 1).jones.m};
    return build_chain(Scheme::Concentrate, p12, p34);
}

void bench_replications(benchmark::State& state, Exec exec) {
    NoisyChain chain = make_chain();
    const ProbabilityTable table = chsh_probability_table(
        chain, Branch::PP, optimal_settings_psi_plus(), 0.912);
    SamplingConfig cfg;
    cfg.seed = 7;
    const int n_reps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto reps = replicate_chsh(table, cfg, 0.004, n_reps, exec);
        benchmark::DoNotOptimize(reps.data());
    }
    state.SetItemsProcessed(state.iterations() * n_reps);
}

void bench_delay_scan(benchmark::State& state, Exec exec) {
    NoisyChain chain = make_chain();
    NoiseParams noise;
    noise.overlap_gamma = 0.83;
    std::vector<double> delays;
    const int n_points = static_cast<int>(state.range(0));
    for (int i = 0; i < n_points; ++i) {
        delays.push_back(-200.0 + 400.0 * i / (n_points - 1));
    }
    SamplingConfig cfg;
    cfg.seed = 7;
    for (auto _ : state) {
        auto points = delay_scan(chain, Branch::PP, noise, delays, cfg, false, exec);
        benchmark::DoNotOptimize(points.data());
    }
    state.SetItemsProcessed(state.iterations() * n_points);
}

}  // namespace

BENCHMARK_CAPTURE(bench_replications, serial, Exec::Serial)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(bench_replications, parallel, Exec::Parallel)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(bench_delay_scan, serial, Exec::Serial)->Arg(401)->Arg(4001);
BENCHMARK_CAPTURE(bench_delay_scan, parallel, Exec::Parallel)->Arg(401)->Arg(4001);

BENCHMARK_MAIN();
