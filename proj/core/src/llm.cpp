#include "asag/llm.hpp"

#include <cmath>
#include <fstream>

#include "asag/errors.hpp"
#include "asag/hash.hpp"
#include "http_util.hpp"

namespace asag::llm {

using nlohmann::json;

void ModelConfig::validate() const {
  if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
  if (max_output_tokens < 1) throw ValidationError("max_output_tokens must be >= 1");
  if (temperature && *temperature < 0.0) {
    throw ValidationError("temperature must be >= 0");
  }
}

json ModelConfig::to_json() const {
  json j{{"model_name", model_name},
         {"max_output_tokens", max_output_tokens},
         {"structured_output", structured_output},
         {"request_timeout_ms", request_timeout.count()},
         {"max_attempts", max_attempts}};
  if (temperature) j["temperature"] = *temperature;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.model_name = j.at("model_name").get<std::string>();
  if (j.contains("temperature")) {
    c.temperature = j["temperature"].get<double>();
  } else {
    c.temperature.reset();
  }
  c.max_output_tokens = j.value("max_output_tokens", 1024);
  c.structured_output = j.value("structured_output", false);
  c.request_timeout = std::chrono::milliseconds(j.value("request_timeout_ms", 60'000));
  c.max_attempts = j.value("max_attempts", 3);
  c.validate();
  return c;
}

UsageRecord& UsageRecord::operator+=(const UsageRecord& other) {
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  wall_time += other.wall_time;
  estimated_cost += other.estimated_cost;
  return *this;
}

json UsageRecord::to_json() const {
  return {{"prompt_tokens", prompt_tokens},
          {"completion_tokens", completion_tokens},
          {"wall_time_ms", wall_time.count()},
          {"estimated_cost", estimated_cost}};
}

UsageRecord UsageRecord::from_json(const json& j) {
  UsageRecord u;
  u.prompt_tokens = j.value("prompt_tokens", 0LL);
  u.completion_tokens = j.value("completion_tokens", 0LL);
  u.wall_time = std::chrono::milliseconds(j.value("wall_time_ms", 0LL));
  u.estimated_cost = j.value("estimated_cost", 0.0);
  return u;
}

std::string reason_code(ParseFailure::Reason reason) {
  switch (reason) {
    case ParseFailure::Reason::NoJsonFound: return "no-json-found";
    case ParseFailure::Reason::BadSchema: return "bad-schema";
    case ParseFailure::Reason::GradeOutOfRange: return "grade-out-of-range";
    case ParseFailure::Reason::GradeNotInteger: return "grade-not-integer";
    case ParseFailure::Reason::UnknownItem: return "unknown-item";
    case ParseFailure::Reason::MissingItem: return "missing-item";
    case ParseFailure::Reason::DuplicateItem: return "duplicate-item";
  }
  return "unknown";
}

namespace {

// First complete JSON object in raw: balanced-brace scan that respects
// string literals, then a real parse of the candidate slice. Prose and
// markdown fences around the object are ignored.
std::optional<json> extract_first_json(const std::string& raw) {
  for (std::size_t start = raw.find('{'); start != std::string::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          try {
            return json::parse(raw.substr(start, i - start + 1));
          } catch (const json::parse_error&) {
            break;  // keep searching from the next '{'
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

GradeParse parse_grade_response(const std::string& raw) {
  auto j = extract_first_json(raw);
  if (!j) {
    return ParseFailure{ParseFailure::Reason::NoJsonFound,
                        "no JSON object in response"};
  }
  if (!j->contains("grade") || !j->contains("feedback") ||
      !(*j)["feedback"].is_string()) {
    return ParseFailure{ParseFailure::Reason::BadSchema,
                        "expected fields \"grade\" and string \"feedback\""};
  }
  const json& grade = (*j)["grade"];
  if (!grade.is_number()) {
    return ParseFailure{ParseFailure::Reason::BadSchema,
                        "\"grade\" is not a number"};
  }
  if (!grade.is_number_integer()) {
    return ParseFailure{ParseFailure::Reason::GradeNotInteger,
                        "\"grade\" is not an integer"};
  }
  const long long value = grade.get<long long>();
  if (value < 0 || value > 100) {
    return ParseFailure{ParseFailure::Reason::GradeOutOfRange,
                        "\"grade\" = " + std::to_string(value)};
  }
  GradeResult result;
  result.grade = static_cast<int>(value);
  result.feedback = (*j)["feedback"].get<std::string>();
  return result;
}

RubricParse parse_rubric_response(const std::string& raw, const Rubric& rubric) {
  auto j = extract_first_json(raw);
  if (!j) {
    return ParseFailure{ParseFailure::Reason::NoJsonFound,
                        "no JSON object in response"};
  }
  if (!j->contains("feedback") || !(*j)["feedback"].is_string() ||
      !j->contains("rubric_items") || !(*j)["rubric_items"].is_array()) {
    return ParseFailure{ParseFailure::Reason::BadSchema,
                        "expected string \"feedback\" and list \"rubric_items\""};
  }
  RubricResult result;
  result.feedback = (*j)["feedback"].get<std::string>();
  for (const auto& entry : (*j)["rubric_items"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string() || !entry.contains("selected") ||
        !entry["selected"].is_boolean()) {
      return ParseFailure{ParseFailure::Reason::BadSchema,
                          "rubric_items entries must be {name, selected}"};
    }
    const std::string name = entry["name"].get<std::string>();
    const RubricItem* item = rubric.find_by_name(name);
    if (!item) {
      return ParseFailure{ParseFailure::Reason::UnknownItem,
                          "invented rubric item \"" + name + "\""};
    }
    if (result.selections.count(item->number)) {
      return ParseFailure{ParseFailure::Reason::DuplicateItem,
                          "duplicated rubric item \"" + item->name + "\""};
    }
    result.selections[item->number] = entry["selected"].get<bool>();
  }
  for (const auto& item : rubric.items()) {
    if (!result.selections.count(item.number)) {
      return ParseFailure{ParseFailure::Reason::MissingItem,
                          "missing rubric item \"" + item.name + "\""};
    }
  }
  return result;
}

MockCompletionBackend::MockCompletionBackend()
    : default_response_("{\"grade\": 70, \"feedback\": \"mock feedback\"}") {}

void MockCompletionBackend::set_default_response(std::string text) {
  std::lock_guard lock(mutex_);
  default_response_ = std::move(text);
}

void MockCompletionBackend::program(const std::string& prompt_hash_hex,
                                    std::vector<std::string> responses) {
  if (responses.empty()) {
    throw ValidationError("mock script entry must have at least one response");
  }
  std::lock_guard lock(mutex_);
  scripted_[prompt_hash_hex] = std::move(responses);
}

Completion MockCompletionBackend::complete(const std::string& prompt,
                                           const ModelConfig&) {
  const std::uint64_t hash = fnv1a64(prompt);
  const std::string hex = to_hex(hash);

  std::string text;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = scripted_.find(hex);
    if (it == scripted_.end()) it = scripted_.find("*");
    if (it != scripted_.end()) {
      std::size_t& cursor = cursor_[it->first == "*" ? hex : it->first];
      text = it->second[std::min(cursor, it->second.size() - 1)];
      ++cursor;
    } else if (grade_from_hash_) {
      text = "{\"grade\": " + std::to_string(hash % 101) +
             ", \"feedback\": \"mock feedback\"}";
    } else {
      text = default_response_;
    }
  }

  Completion completion;
  completion.text = std::move(text);
  // Rough 4-chars-per-token accounting; wall_time stays 0 so mock runs
  // are byte-reproducible.
  completion.usage.prompt_tokens = static_cast<long long>(prompt.size() / 4);
  completion.usage.completion_tokens =
      static_cast<long long>(completion.text.size() / 4);
  return completion;
}

std::unique_ptr<MockCompletionBackend> MockCompletionBackend::from_script(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open mock script " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("mock script " + path.string() + ": invalid JSON: " +
                          e.what());
  }
  auto backend = std::make_unique<MockCompletionBackend>();
  if (j.contains("default")) {
    backend->set_default_response(j["default"].get<std::string>());
  }
  backend->set_grade_from_hash(j.value("grade_from_hash", false));
  if (j.contains("by_hash")) {
    for (const auto& [hash, responses] : j["by_hash"].items()) {
      backend->program(hash, responses.get<std::vector<std::string>>());
    }
  }
  return backend;
}

long long MockCompletionBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

void MockCompletionBackend::reset_counters() {
  std::lock_guard lock(mutex_);
  calls_ = 0;
  cursor_.clear();
}

HttpCompletionBackend::HttpCompletionBackend(HttpCompletionConfig config)
    : config_(std::move(config)) {}

Completion HttpCompletionBackend::complete(const std::string& prompt,
                                           const ModelConfig& config) {
  json body{{"model", config.model_name},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"max_completion_tokens", config.max_output_tokens}};
  if (config.temperature) body["temperature"] = *config.temperature;
  if (config.structured_output) {
    body["response_format"] = json{{"type", "json_object"}};
  }

  const auto started = std::chrono::steady_clock::now();
  json response = detail::post_json_with_retry(
      config_.base_url, "/chat/completions", config_.api_key, body,
      static_cast<int>(config.request_timeout.count() / 1000),
      config_.transport_attempts);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  Completion completion;
  try {
    completion.text =
        response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat response shape: ") + e.what());
  }
  if (response.contains("usage")) {
    completion.usage.prompt_tokens = response["usage"].value("prompt_tokens", 0LL);
    completion.usage.completion_tokens =
        response["usage"].value("completion_tokens", 0LL);
  }
  completion.usage.wall_time = elapsed;
  return completion;
}

PriceTable PriceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open price table " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("price table " + path.string() + ": invalid JSON: " +
                          e.what());
  }
  PriceTable table;
  for (const auto& [model, entry] : j.items()) {
    table.set(model, entry.value("prompt_per_1k", 0.0),
              entry.value("completion_per_1k", 0.0));
  }
  return table;
}

void PriceTable::set(const std::string& model, double prompt_per_1k,
                     double completion_per_1k) {
  prices_[model] = Price{prompt_per_1k, completion_per_1k};
}

double PriceTable::cost(const std::string& model, const UsageRecord& usage) const {
  auto it = prices_.find(model);
  if (it == prices_.end()) return 0.0;
  return static_cast<double>(usage.prompt_tokens) / 1000.0 * it->second.prompt_per_1k +
         static_cast<double>(usage.completion_tokens) / 1000.0 *
             it->second.completion_per_1k;
}

}  // namespace asag::llm
