#include <benchmark/benchmark.h>

#include <stdexcept>
#include <string>

#include "htppn/config_selector.hpp"
#include "htppn/model_io.hpp"
#include "htppn/pattern_reducer.hpp"
#include "htppn/timed_sim.hpp"

namespace {

const htppn::Htppn& healthcare() {
  static const htppn::Htppn model = [] {
    auto r = htppn::parse_model(htppn::load_source(std::string(HTPPN_CORPUS_DIR) + "/healthcare.htppn"));
    if (!r.ok()) throw std::runtime_error("healthcare.htppn does not parse");
    return std::move(*r.model);
  }();
  return model;
}

void BM_SelectOptimal(benchmark::State& state) {
  const auto& m = healthcare();
  for (auto _ : state) benchmark::DoNotOptimize(htppn::select_optimal(m, htppn::Weights()));
}
BENCHMARK(BM_SelectOptimal);

void BM_BruteForce(benchmark::State& state) {
  const auto& m = healthcare();
  for (auto _ : state) benchmark::DoNotOptimize(htppn::brute_force_optimal(m, htppn::Weights()));
}
BENCHMARK(BM_BruteForce);

void BM_FlattenReduce(benchmark::State& state) {
  const auto& m = healthcare();
  const auto config = htppn::enumerate_configurations(m).back();
  for (auto _ : state) benchmark::DoNotOptimize(htppn::reduce(htppn::flatten(m, config)));
}
BENCHMARK(BM_FlattenReduce);

void BM_PropagateWindows(benchmark::State& state) {
  const auto& m = healthcare();
  const auto flat = htppn::flatten(m, htppn::enumerate_configurations(m).back());
  for (auto _ : state) benchmark::DoNotOptimize(htppn::propagate_windows(flat));
}
BENCHMARK(BM_PropagateWindows);

void BM_ParseSerialize(benchmark::State& state) {
  const std::string text = htppn::serialize_model(healthcare());
  for (auto _ : state) {
    auto r = htppn::parse_model({text, "bench"});
    benchmark::DoNotOptimize(htppn::serialize_model(*r.model));
  }
}
BENCHMARK(BM_ParseSerialize);

}  // namespace

BENCHMARK_MAIN();
