#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "asag/embeddings.hpp"
#include "asag/errors.hpp"
#include "test_util.hpp"

using namespace asag;
using namespace asag::embeddings;

TEST_CASE("mock embedder is deterministic and unit-norm") {
  MockEmbeddingBackend backend(16);
  const auto a = backend.embed("the student answered correctly");
  const auto b = backend.embed("the student answered correctly");
  CHECK(a == b);
  double norm = 0.0;
  for (double x : a) norm += x * x;
  CHECK(std::fabs(std::sqrt(norm) - 1.0) < 1e-9);
}

TEST_CASE("mock embedder separates distinct texts") {
  MockEmbeddingBackend backend(16);
  std::set<std::vector<double>> seen;
  for (int i = 0; i < 200; ++i) {
    seen.insert(backend.embed("text variant " + std::to_string(i)));
  }
  CHECK(seen.size() == 200);
}

TEST_CASE("mock embedder rejects empty text") {
  MockEmbeddingBackend backend(8);
  CHECK_THROWS_AS(backend.embed(""), ValidationError);
}

TEST_CASE("euclidean_distance basics") {
  CHECK(euclidean_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(euclidean_distance({0, 0}, {3, 4}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(euclidean_distance({1, 2}, {1, 2, 3}), ValidationError);
}

TEST_CASE("euclidean_distance matches a naive loop oracle") {
  std::mt19937_64 gen(42);
  auto uniform = [&gen] { return (gen() >> 11) * 0x1p-53 * 20.0 - 10.0; };
  for (int trial = 0; trial < 100; ++trial) {
    EmbeddingVector a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = uniform();
      b[i] = uniform();
    }
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::fabs(euclidean_distance(a, b) - std::sqrt(sum)) < 1e-12);
  }
}

TEST_CASE("euclidean_distance metric properties on sampled triples") {
  MockEmbeddingBackend backend(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = backend.embed("a" + std::to_string(trial));
    const auto b = backend.embed("b" + std::to_string(trial));
    const auto c = backend.embed("c" + std::to_string(trial));
    const double ab = euclidean_distance(a, b);
    const double ba = euclidean_distance(b, a);
    const double ac = euclidean_distance(a, c);
    const double cb = euclidean_distance(c, b);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= ac + cb + 1e-9);
  }
  CHECK(euclidean_distance(backend.embed("x"), backend.embed("x")) == 0.0);
}

namespace {

struct Fixture {
  corpus::Dataset dataset = testutil::make_dataset(1, 12);
  EmbeddingStore store{0, "mock-d32"};
  MockEmbeddingBackend backend{32};

  Fixture() {
    for (const auto& s : dataset.submissions()) {
      store.put(s.submission_id, backend.embed(s.response_text));
    }
  }
  std::vector<const corpus::Submission*> pool(const std::string& exclude) const {
    return corpus::example_pool(dataset, "q1", exclude);
  }
  const corpus::Submission& target() const { return dataset.submission("s001"); }
};

}  // namespace

TEST_CASE("None strategy selects nothing") {
  Fixture f;
  SelectionStrategy strategy;
  strategy.kind = SelectionStrategy::Kind::None;
  const auto result = select_examples(strategy, f.pool("s001"), f.target(), f.store);
  CHECK(result.selected.empty());
  CHECK_FALSE(result.pool_truncated);
}

TEST_CASE("RAG picks the nearest neighbors ascending") {
  // 1-d store with hand-placed distances.
  corpus::Dataset dataset = testutil::make_dataset(1, 4);
  EmbeddingStore store(1, "hand");
  store.put("s001", {0.0});  // target
  store.put("s002", {0.9});
  store.put("s003", {0.1});
  store.put("s004", {0.5});
  SelectionStrategy strategy;
  strategy.kind = SelectionStrategy::Kind::Rag;
  strategy.k = 2;
  const auto pool = corpus::example_pool(dataset, "q1", "s001");
  const auto result =
      select_examples(strategy, pool, dataset.submission("s001"), store);
  REQUIRE(result.selected.size() == 2);
  CHECK(result.selected[0]->submission_id == "s003");
  CHECK(result.selected[1]->submission_id == "s004");
}

TEST_CASE("RAG reports a missing embedding by id") {
  Fixture f;
  EmbeddingStore sparse(32, "mock-d32");
  sparse.put("s001", f.backend.embed("x"));
  SelectionStrategy strategy;
  strategy.kind = SelectionStrategy::Kind::Rag;
  strategy.k = 3;
  CHECK_THROWS_WITH_AS(
      select_examples(strategy, f.pool("s001"), f.target(), sparse),
      doctest::Contains("s002"), ValidationError);
}

TEST_CASE("Random selection is seeded and deterministic") {
  Fixture f;
  SelectionStrategy strategy;
  strategy.kind = SelectionStrategy::Kind::Random;
  strategy.k = 3;
  strategy.seed = 1234;
  const auto pool = f.pool("s001");
  const auto a = select_examples(strategy, pool, f.target(), f.store);
  const auto b = select_examples(strategy, pool, f.target(), f.store);
  REQUIRE(a.selected.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.selected[i]->submission_id == b.selected[i]->submission_id);
  }
  SelectionStrategy unseeded = strategy;
  unseeded.seed.reset();
  CHECK_THROWS_AS(select_examples(unseeded, pool, f.target(), f.store),
                  ValidationError);
}

TEST_CASE("selection size is min(k, pool) and never duplicates or target") {
  Fixture f;
  for (auto kind : {SelectionStrategy::Kind::Random, SelectionStrategy::Kind::Rag}) {
    for (std::size_t k : {0u, 1u, 5u, 11u, 20u}) {
      SelectionStrategy strategy;
      strategy.kind = kind;
      strategy.k = k;
      strategy.seed = 7;
      const auto pool = f.pool("s001");
      const auto result = select_examples(strategy, pool, f.target(), f.store);
      CHECK(result.selected.size() == std::min(k, pool.size()));
      CHECK(result.pool_truncated == (pool.size() < k));
      std::set<std::string> ids;
      for (const auto* s : result.selected) {
        CHECK(s->submission_id != "s001");
        CHECK(ids.insert(s->submission_id).second);
      }
    }
  }
}

TEST_CASE("RAG equals brute-force k-NN on randomized pools") {
  // Property form of the acceptance check, at unit-test scale.
  MockEmbeddingBackend backend(16);
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int pool_size = 1 + static_cast<int>(gen() % 60);
    corpus::Dataset dataset = testutil::make_dataset(1, pool_size + 1);
    EmbeddingStore store(16, backend.tag());
    for (const auto& s : dataset.submissions()) {
      store.put(s.submission_id, backend.embed(s.response_text + std::to_string(trial)));
    }
    const auto& target = dataset.submissions().front();
    const auto pool = corpus::example_pool(dataset, "q1", target.submission_id);
    SelectionStrategy strategy;
    strategy.kind = SelectionStrategy::Kind::Rag;
    strategy.k = 1 + gen() % 8;
    const auto result = select_examples(strategy, pool, target, store);

    // Oracle: full sort on (distance, id).
    std::vector<std::pair<double, std::string>> scored;
    for (const auto* s : pool) {
      scored.emplace_back(
          euclidean_distance(store.at(s->submission_id), store.at(target.submission_id)),
          s->submission_id);
    }
    std::sort(scored.begin(), scored.end());
    REQUIRE(result.selected.size() == std::min<std::size_t>(strategy.k, pool.size()));
    for (std::size_t i = 0; i < result.selected.size(); ++i) {
      CHECK(result.selected[i]->submission_id == scored[i].second);
    }
  }
}

TEST_CASE("embedding cache round-trips and filters by backend tag") {
  MockEmbeddingBackend backend(8);
  EmbeddingStore store(8, backend.tag());
  store.put("a", backend.embed("first"));
  store.put("b", backend.embed("second"));
  const auto path = std::filesystem::temp_directory_path() / "asag_cache.jsonl";
  store.save_cache(path);

  EmbeddingStore reloaded(8, backend.tag());
  reloaded.load_cache(path);
  CHECK(reloaded.size() == 2);
  CHECK(reloaded.at("a") == store.at("a"));

  EmbeddingStore other(8, "different-backend");
  other.load_cache(path);
  CHECK(other.size() == 0);
  std::filesystem::remove(path);
}

TEST_CASE("store rejects mismatched dimensions") {
  EmbeddingStore store(4, "t");
  store.put("a", {1, 2, 3, 4});
  CHECK_THROWS_AS(store.put("b", {1, 2}), ValidationError);
}
