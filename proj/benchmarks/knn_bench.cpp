#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "asag/corpus.hpp"
#include "asag/embeddings.hpp"

namespace {

struct PoolFixture {
  std::vector<asag::corpus::Submission> submissions;
  std::vector<const asag::corpus::Submission*> pool;
  asag::embeddings::EmbeddingStore store;
  asag::corpus::Submission target;

  PoolFixture(std::size_t pool_size, std::size_t dimension)
      : store(dimension, "mock-d" + std::to_string(dimension)) {
    asag::embeddings::MockEmbeddingBackend backend(dimension);
    submissions.resize(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
      auto& s = submissions[i];
      s.submission_id = "s" + std::to_string(i);
      s.question_id = "q";
      s.response_text = "pool member " + std::to_string(i);
      store.put(s.submission_id, backend.embed(s.response_text));
    }
    for (const auto& s : submissions) pool.push_back(&s);
    target.submission_id = "target";
    target.question_id = "q";
    target.response_text = "the submission being graded";
    store.put(target.submission_id, backend.embed(target.response_text));
  }
};

void BM_SelectExamplesRag(benchmark::State& state) {
  PoolFixture fixture(static_cast<std::size_t>(state.range(0)),
                      static_cast<std::size_t>(state.range(1)));
  asag::embeddings::SelectionStrategy strategy;
  strategy.kind = asag::embeddings::SelectionStrategy::Kind::Rag;
  strategy.k = 5;
  for (auto _ : state) {
    auto result = asag::embeddings::select_examples(strategy, fixture.pool,
                                                    fixture.target, fixture.store);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_SelectExamplesRag)
    ->Args({100, 256})
    ->Args({1000, 256})
    ->Args({10000, 256})
    ->Args({1000, 1536});

void BM_EuclideanDistance(benchmark::State& state) {
  asag::embeddings::MockEmbeddingBackend backend(
      static_cast<std::size_t>(state.range(0)));
  const auto a = backend.embed("left vector");
  const auto b = backend.embed("right vector");
  for (auto _ : state) {
    benchmark::DoNotOptimize(asag::embeddings::euclidean_distance(a, b));
  }
}
BENCHMARK(BM_EuclideanDistance)->Arg(256)->Arg(1536);

}  // namespace

BENCHMARK_MAIN();
