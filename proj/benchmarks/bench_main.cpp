#include <benchmark/benchmark.h>

#include <random>

#include "dualpath/dpn.hpp"
#include "dualpath/harness.hpp"
#include "dualpath/sigpath.hpp"
#include "dualpath/waveform.hpp"

using namespace dualpath;

namespace {

ComplexSequence noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  ComplexSequence x(n);
  for (auto& v : x) v = Complex(d(rng), d(rng));
  return x;
}

LabeledSample qpsk_sample(std::size_t n) {
  auto spec = waveform::dataset1();
  spec.universe = {ModulationScheme::kQpsk};
  spec.n_r = n;
  waveform::Rng rng(7);
  return waveform::generate_sample(spec, rng);
}

}  // namespace

static void BM_FirSame(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 1), h = noise(65, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sigpath::fir_same(x, h));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FirSame)->Arg(128)->Arg(1024);

static void BM_SignalPath(benchmark::State& state) {
  const auto s = qpsk_sample(static_cast<std::size_t>(state.range(0)));
  const auto rx = harness::oracle_rx_params(s, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sigpath::run_signal_path(s.y, rx, ModulationScheme::kQpsk));
}
BENCHMARK(BM_SignalPath)->Arg(128)->Arg(1024);

static void BM_DpnInfer(benchmark::State& state) {
  dpn::DpnConfig c;
  c.class_count = 1;
  const dpn::DpnModel m(c);
  const auto s = qpsk_sample(128);
  for (auto _ : state) benchmark::DoNotOptimize(dpn::infer(m, s.y));
}
BENCHMARK(BM_DpnInfer);

static void BM_TrainStep(benchmark::State& state) {
  dpn::DpnConfig c;
  c.class_count = 1;
  const dpn::DpnModel m(c);
  const auto s = qpsk_sample(128);
  auto g = nn::Gradients::zeros_like(m.params());
  for (auto _ : state) dpn::accumulate_gradients(m, s, {}, nullptr, g);
}
BENCHMARK(BM_TrainStep);

static void BM_Generate(benchmark::State& state) {
  const auto spec = waveform::dataset2();
  waveform::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(waveform::generate_sample(spec, rng));
}
BENCHMARK(BM_Generate);
BENCHMARK_MAIN();
