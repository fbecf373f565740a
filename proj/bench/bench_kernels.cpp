// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "support.hpp"
#include "voterbias/estimator.hpp"
#include "voterbias/synthetic.hpp"
#include "voterbias/variables.hpp"

using namespace voterbias;

namespace {

const EventStore& store() {
  static const EventStore s = vbtest::build(vbtest::random_dump(99, 4000, 60000));
  return s;
}

std::vector<est::DesignMatrix> strata(int count) {
  std::vector<est::DesignMatrix> out;
  for (int i = 0; i < count; ++i) {
    auto d = synth::generate(synth::reference_scenario(20000, static_cast<std::uint64_t>(i + 1)));
    d.stratum = "s" + std::to_string(i);
    out.push_back(std::move(d));
  }
  return out;
}

void BM_CompileParallel(benchmark::State& state) {
  const auto w = vars::WindowSpec::percentile(30);
  for (auto _ : state) benchmark::DoNotOptimize(vars::compile_records(store(), w));
}

void BM_CompileSerial(benchmark::State& state) {
  const auto w = vars::WindowSpec::percentile(30);
  for (auto _ : state) benchmark::DoNotOptimize(vars::compile_records_serial(store(), w));
}

void BM_FitStrataParallel(benchmark::State& state) {
  const auto s = strata(16);
  for (auto _ : state) benchmark::DoNotOptimize(est::fit_strata(s, est::Method::TSLS));
}

void BM_FitStrataSerial(benchmark::State& state) {
  const auto s = strata(16);
  for (auto _ : state) {
    for (const auto& d : s) benchmark::DoNotOptimize(est::tsls_fit(d));
  }
}

}  // namespace

BENCHMARK(BM_CompileParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CompileSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FitStrataParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FitStrataSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
