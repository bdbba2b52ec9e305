#include <benchmark/benchmark.h>

#include <complex>

#include "fixtures.hpp"
#include "lgspdc/biphoton.hpp"
#include "lgspdc/hypergeometric.hpp"
#include "lgspdc/optimize.hpp"
#include "lgspdc/state.hpp"
#include "lgspdc/tomography.hpp"

using namespace lgspdc;

static void BM_Hyp2F1Pfaff(benchmark::State& state) {
  const std::complex<double> z(0.94, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(hyp2f1_regularized(3, 5, -4, z));
}
BENCHMARK(BM_Hyp2F1Pfaff);

static void BM_ModeAmplitude(benchmark::State& state) {
  SpdcConfig config = fixtures::matching_config();
  config.z_order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mode_amplitude(config, 1, 2, 2, 1e11));
}
BENCHMARK(BM_ModeAmplitude)->Arg(64)->Arg(256);

static void BM_Spectrum(benchmark::State& state) {
  const SpdcConfig config = fixtures::matching_config();
  const DetuningGrid grid = fixtures::default_grid(config, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectrum(config, 0, 0, 2, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Spectrum)->Arg(501)->Arg(2001)->Unit(benchmark::kMicrosecond);

static void BM_CorrelationMatrix(benchmark::State& state) {
  const SpdcConfig config = fixtures::decomposition_config();
  const DetuningGrid grid = fixtures::default_grid(config);
  const CorrelationOptions options{.threads = static_cast<unsigned>(state.range(0))};
  for (auto _ : state)
    benchmark::DoNotOptimize(joint_correlation_matrix(config, 3, 1, grid, std::nullopt, options));
}
BENCHMARK(BM_CorrelationMatrix)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_ModeBasisBrightness(benchmark::State& state) {
  const SpdcConfig config = fixtures::superposition_config();
  const ModeBasis basis(config, 2, static_cast<int>(state.range(0)), fixtures::default_grid(config));
  const SuperpositionModes modes = SuperpositionModes::uniform(basis.p_max());
  for (auto _ : state) benchmark::DoNotOptimize(cost_brightness(modes, basis));
}
BENCHMARK(BM_ModeBasisBrightness)->Arg(3)->Arg(10);

static void BM_MleReconstruct(benchmark::State& state) {
  const TomographyRun run = simulate_counts(embedded_target(0.0), projector_set(1, 2), 90000, 17);
  for (auto _ : state) benchmark::DoNotOptimize(mle_reconstruct(run));
}
BENCHMARK(BM_MleReconstruct)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
