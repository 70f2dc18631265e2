#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asag/corpus.hpp"
#include "asag/embeddings.hpp"
#include "asag/llm.hpp"
#include "asag/prompting.hpp"

namespace asag::engine {

struct RunConfig {
  std::string dataset_name;
  embeddings::SelectionStrategy strategy;
  llm::ModelConfig model;
  bool rubric_mode = false;
  int parallelism = 4;
  std::optional<std::size_t> sample_size;
  std::optional<std::uint64_t> sample_seed;
  std::string template_id;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct GradedRecord {
  std::string submission_id;
  std::optional<double> predicted_percent;           // scalar mode
  std::optional<std::map<int, bool>> predicted_items;  // rubric mode
  std::string feedback;
  int attempts = 0;
  enum class Status { Ok, Failed };
  Status status = Status::Failed;
  std::string failure_reason;  // parse reason code or transport message
  std::string last_raw;        // final raw response of a terminal failure
  llm::UsageRecord usage;
  std::vector<std::string> example_ids;
  bool pool_truncated = false;

  nlohmann::json to_json() const;
  static GradedRecord from_json(const nlohmann::json& j);
};

struct RunResult {
  RunConfig config;
  std::vector<GradedRecord> records;
  std::string started;   // ISO 8601 UTC
  std::string finished;
  llm::UsageRecord totals;
};

// Shared, read-only during a run. The embedding backend/store are only
// needed for Rag; the price table may be null (costs become 0).
struct RunDeps {
  llm::CompletionBackend* backend = nullptr;
  embeddings::EmbeddingBackend* embedder = nullptr;
  embeddings::EmbeddingStore* store = nullptr;
  const prompting::PromptTemplate* tmpl = nullptr;
  const llm::PriceTable* prices = nullptr;
};

// select -> build -> complete-with-retry -> parse for one submission.
// Terminal parse failures yield a Failed record, never a grade.
GradedRecord grade_submission(const corpus::Dataset& dataset,
                              const corpus::Submission& target,
                              const RunConfig& config, const RunDeps& deps);

// Grades all (or sampled) submissions with at most config.parallelism
// in-flight backend calls. Record order always matches dataset order, so
// runs are diffable across parallelism levels. Individual failures are
// recorded; only AuthError aborts the batch.
RunResult grade_batch(const corpus::Dataset& dataset, const RunConfig& config,
                      const RunDeps& deps);

// Uniform sample of n submissions without replacement; questions are
// restricted to those still referenced.
corpus::Dataset sample_subset(const corpus::Dataset& dataset, std::size_t n,
                              std::uint64_t seed);

// 100 * (weight of selected items) / (total weight). Throws on key
// mismatch with the rubric.
double rubric_score(const std::map<int, bool>& selections, const Rubric& rubric);

// Run directory layout: config.json, records.jsonl, usage.json.
void save_run(const RunResult& run, const std::filesystem::path& dir);
RunResult load_run(const std::filesystem::path& dir);

}  // namespace asag::engine
