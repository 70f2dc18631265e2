#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "asag/eval.hpp"

namespace {

asag::eval::PairedScores make_scores(std::size_t n) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(0.0, 100.0);
  asag::eval::PairedScores scores;
  for (std::size_t i = 0; i < n; ++i) {
    scores.pairs.emplace_back(dist(rng), dist(rng));
  }
  return scores;
}

void BM_Rmse(benchmark::State& state) {
  const auto scores = make_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(asag::eval::rmse(scores));
  }
}
BENCHMARK(BM_Rmse)->Arg(100)->Arg(10000);

void BM_PearsonR(benchmark::State& state) {
  const auto scores = make_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(asag::eval::pearson_r(scores));
  }
}
BENCHMARK(BM_PearsonR)->Arg(100)->Arg(10000);

void BM_Quartiles(benchmark::State& state) {
  const auto scores = make_scores(static_cast<std::size_t>(state.range(0)));
  const auto errors = scores.abs_errors();
  for (auto _ : state) {
    benchmark::DoNotOptimize(asag::eval::quartiles(errors));
  }
}
BENCHMARK(BM_Quartiles)->Arg(100)->Arg(10000);

void BM_WelchTTest(benchmark::State& state) {
  const auto a = make_scores(static_cast<std::size_t>(state.range(0))).abs_errors();
  const auto b = make_scores(static_cast<std::size_t>(state.range(0))).abs_errors();
  for (auto _ : state) {
    benchmark::DoNotOptimize(asag::eval::welch_t_test(a, b));
  }
}
BENCHMARK(BM_WelchTTest)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
