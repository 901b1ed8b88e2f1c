#include <benchmark/benchmark.h>

#include <vector>

#include "quadet/detect.hpp"
#include "quadet/sim.hpp"

using namespace quadet;

namespace {

Spectrum spectrum(std::size_t n) { return decompose(build_covariance_pair(ChannelSpec::white_db(n, 0.7, 10.0))); }

std::vector<double> powers(const Spectrum& s, double eps, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const auto r = sample_whitened(s, eps, rng);
  std::vector<double> p(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) p[k] = std::norm(r(k));
  return p;
}

}  // namespace

static void BM_Decompose(benchmark::State& state) {
  const auto pair = build_covariance_pair(ChannelSpec::white_db(state.range(0), 0.7, 10.0));
  for (auto _ : state) benchmark::DoNotOptimize(decompose(pair));
}
BENCHMARK(BM_Decompose)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

static void BM_SampleWhitened(benchmark::State& state) {
  const auto s = spectrum(state.range(0));
  RngStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_whitened(s, 1.0, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleWhitened)->RangeMultiplier(4)->Range(16, 1024);

static void BM_SamplePhysical(benchmark::State& state) {
  const auto pair = build_covariance_pair(ChannelSpec::white_db(state.range(0), 0.7, 10.0));
  RngStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_physical(pair, 1.0, rng));
}
BENCHMARK(BM_SamplePhysical)->RangeMultiplier(4)->Range(16, 256);

static void BM_EstimateFromPower(benchmark::State& state) {
  const auto s = spectrum(state.range(0));
  const auto est = build_bque(s, 1.0);
  const auto p = powers(s, 1.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_from_power(est, p.data()));
}
BENCHMARK(BM_EstimateFromPower)->RangeMultiplier(4)->Range(16, 1024);

static void BM_MlDetect(benchmark::State& state) {
  const auto s = spectrum(state.range(0));
  const MlDetector ml(s, Constellation::uniform_ask(8));
  const auto p = powers(s, 1.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ml.detect_power(p.data()));
}
BENCHMARK(BM_MlDetect)->RangeMultiplier(4)->Range(16, 1024);

static void BM_AbqueDetect(benchmark::State& state) {
  const auto s = spectrum(state.range(0));
  const auto c = Constellation::uniform_ask(8);
  const auto ed = build_ed(s);
  const auto th = compute_thresholds(ed, s, c);
  const auto bank = BqueBank::build(s, c);
  const auto p = powers(s, 1.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(abque_detect_power(ed, th, bank, p.data()));
}
BENCHMARK(BM_AbqueDetect)->RangeMultiplier(4)->Range(16, 1024);

static void BM_ComputeThresholds(benchmark::State& state) {
  const auto s = spectrum(state.range(0));
  const auto c = Constellation::uniform_ask(8);
  const auto est = build_bque(s, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(compute_thresholds(est, s, c));
}
BENCHMARK(BM_ComputeThresholds)->RangeMultiplier(4)->Range(16, 1024);

static void BM_RunSer(benchmark::State& state) {
  ExperimentSpec spec;
  spec.n_antennas = {static_cast<std::size_t>(state.range(0))};
  spec.snr_db = {10.0};
  spec.detectors = {DetectorKind::kEd, DetectorKind::kBqueGenie, DetectorKind::kAbque, DetectorKind::kMl};
  spec.trials = 10000;
  spec.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_ser(spec));
  state.SetItemsProcessed(state.iterations() * spec.trials);
}
BENCHMARK(BM_RunSer)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
