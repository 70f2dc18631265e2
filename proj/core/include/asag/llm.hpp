#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "asag/rubric.hpp"

namespace asag::llm {

struct ModelConfig {
  std::string model_name = "mock";
  std::optional<double> temperature = 0.0;  // omit for models that fix sampling
  int max_output_tokens = 1024;
  bool structured_output = false;
  std::chrono::milliseconds request_timeout{60'000};
  int max_attempts = 3;  // regrade budget for invalid output

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct UsageRecord {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  std::chrono::milliseconds wall_time{0};
  double estimated_cost = 0.0;

  UsageRecord& operator+=(const UsageRecord& other);
  nlohmann::json to_json() const;
  static UsageRecord from_json(const nlohmann::json& j);
};

struct GradeResult {
  int grade = 0;  // integer in [0,100]
  std::string feedback;
  std::string raw_response;
  int attempts = 1;
};

struct RubricResult {
  std::map<int, bool> selections;  // keys equal the rubric's item numbers
  std::string feedback;
  std::string raw_response;
  int attempts = 1;
};

struct ParseFailure {
  enum class Reason {
    NoJsonFound,
    BadSchema,
    GradeOutOfRange,
    GradeNotInteger,
    UnknownItem,
    MissingItem,
    DuplicateItem,
  };
  Reason reason = Reason::NoJsonFound;
  std::string detail;
};

std::string reason_code(ParseFailure::Reason reason);

using GradeParse = std::variant<GradeResult, ParseFailure>;
using RubricParse = std::variant<RubricResult, ParseFailure>;

// Locates the first complete JSON object in raw, tolerating markdown
// fences and surrounding prose, and checks the scalar-grading schema:
// integer "grade" in [0,100], string "feedback".
GradeParse parse_grade_response(const std::string& raw);

// Checks the rubric schema: string "feedback" plus a "rubric_items" list
// of {name, selected}. Names are matched to rubric items after lowercase
// and whitespace normalization; invented, duplicated, or missing items
// fail the parse.
RubricParse parse_rubric_response(const std::string& raw, const Rubric& rubric);

struct Completion {
  std::string text;
  UsageRecord usage;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // Throws TransportError (retryable, after internal backoff) or
  // AuthError (fatal).
  virtual Completion complete(const std::string& prompt, const ModelConfig& config) = 0;
};

// Deterministic offline backend. Responses are looked up by the FNV hash
// of the prompt: a programmed hash can carry a sequence of responses
// consumed one per attempt (for fault injection), after which the last
// entry repeats. Unprogrammed prompts get the default response, or a
// grade derived from the prompt hash when grade_from_hash is on.
class MockCompletionBackend : public CompletionBackend {
 public:
  MockCompletionBackend();

  Completion complete(const std::string& prompt, const ModelConfig& config) override;

  void set_default_response(std::string text);
  void set_grade_from_hash(bool on) { grade_from_hash_ = on; }
  // Keyed by to_hex(fnv1a64(prompt)); "*" matches any prompt.
  void program(const std::string& prompt_hash_hex, std::vector<std::string> responses);

  // Script file: {"default": str?, "grade_from_hash": bool?,
  //               "by_hash": {hex: [str, ...], "*": [...]}}
  static std::unique_ptr<MockCompletionBackend> from_script(
      const std::filesystem::path& path);

  long long call_count() const;
  void reset_counters();

 private:
  mutable std::mutex mutex_;
  std::string default_response_;
  bool grade_from_hash_ = false;
  std::map<std::string, std::vector<std::string>> scripted_;
  std::map<std::string, std::size_t> cursor_;
  long long calls_ = 0;
};

struct HttpCompletionConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  int transport_attempts = 3;
};

// OpenAI-compatible POST {base_url}/chat/completions client.
class HttpCompletionBackend : public CompletionBackend {
 public:
  explicit HttpCompletionBackend(HttpCompletionConfig config);
  Completion complete(const std::string& prompt, const ModelConfig& config) override;

 private:
  HttpCompletionConfig config_;
};

// Per-1K-token prices keyed by model name; loaded from JSON
// {model: {"prompt_per_1k": x, "completion_per_1k": y}}. Unknown models
// cost 0 (prices drift too fast to hard-code).
class PriceTable {
 public:
  PriceTable() = default;
  static PriceTable load(const std::filesystem::path& path);
  void set(const std::string& model, double prompt_per_1k, double completion_per_1k);
  double cost(const std::string& model, const UsageRecord& usage) const;

 private:
  struct Price {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
  };
  std::map<std::string, Price> prices_;
};

template <typename Result>
struct RetryOutcome {
  std::optional<Result> result;          // set iff a parse succeeded
  std::optional<ParseFailure> failure;   // last failure when terminal
  int attempts = 0;
  std::string last_raw;
  UsageRecord usage;  // summed over all attempts

  bool ok() const { return result.has_value(); }
};

// Calls the backend, parses, and reissues the identical prompt on parse
// failure, up to config.max_attempts total calls. Terminal failures keep
// the last raw response and are never converted into a grade.
template <typename Result>
RetryOutcome<Result> grade_with_retry(
    const std::string& prompt, const ModelConfig& config,
    const std::function<std::variant<Result, ParseFailure>(const std::string&)>& parser,
    CompletionBackend& backend) {
  config.validate();
  RetryOutcome<Result> outcome;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    Completion completion = backend.complete(prompt, config);
    outcome.usage += completion.usage;
    outcome.attempts = attempt;
    outcome.last_raw = completion.text;
    auto parsed = parser(completion.text);
    if (auto* result = std::get_if<Result>(&parsed)) {
      result->raw_response = completion.text;
      result->attempts = attempt;
      outcome.result = std::move(*result);
      outcome.failure.reset();
      return outcome;
    }
    outcome.failure = std::get<ParseFailure>(parsed);
  }
  return outcome;
}

}  // namespace asag::llm
