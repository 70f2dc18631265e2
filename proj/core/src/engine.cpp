#include "asag/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "asag/errors.hpp"
#include "asag/hash.hpp"

namespace asag::engine {

using nlohmann::json;

void RunConfig::validate() const {
  model.validate();
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  if (sample_size && *sample_size == 0) {
    throw ValidationError("sample_size must be positive");
  }
  if (strategy.kind == embeddings::SelectionStrategy::Kind::Random &&
      !strategy.seed) {
    throw ValidationError("Random selection requires a seed");
  }
}

json RunConfig::to_json() const {
  json strategy_json{{"kind", strategy.kind_name()}, {"k", strategy.k}};
  if (strategy.seed) strategy_json["seed"] = *strategy.seed;
  json j{{"dataset_name", dataset_name},
         {"strategy", strategy_json},
         {"model", model.to_json()},
         {"rubric_mode", rubric_mode},
         {"parallelism", parallelism},
         {"template_id", template_id}};
  if (sample_size) j["sample_size"] = *sample_size;
  if (sample_seed) j["sample_seed"] = *sample_seed;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.dataset_name = j.at("dataset_name").get<std::string>();
  const json& s = j.at("strategy");
  c.strategy = embeddings::SelectionStrategy::parse(
      s.at("kind").get<std::string>(), s.value("k", std::size_t{5}),
      s.contains("seed") ? std::optional<std::uint64_t>(s["seed"].get<std::uint64_t>())
                         : std::nullopt);
  c.model = llm::ModelConfig::from_json(j.at("model"));
  c.rubric_mode = j.value("rubric_mode", false);
  c.parallelism = j.value("parallelism", 4);
  if (j.contains("sample_size")) c.sample_size = j["sample_size"].get<std::size_t>();
  if (j.contains("sample_seed")) c.sample_seed = j["sample_seed"].get<std::uint64_t>();
  c.template_id = j.value("template_id", std::string{});
  c.validate();
  return c;
}

json GradedRecord::to_json() const {
  json j{{"submission_id", submission_id},
         {"status", status == Status::Ok ? "ok" : "failed"},
         {"feedback", feedback},
         {"attempts", attempts},
         {"usage", usage.to_json()},
         {"example_ids", example_ids}};
  if (predicted_percent) j["predicted_percent"] = *predicted_percent;
  if (predicted_items) {
    json items = json::object();
    for (const auto& [number, selected] : *predicted_items) {
      items[std::to_string(number)] = selected;
    }
    j["predicted_items"] = items;
  }
  if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
  if (!last_raw.empty()) j["last_raw"] = last_raw;
  if (pool_truncated) j["pool_truncated"] = true;
  return j;
}

GradedRecord GradedRecord::from_json(const json& j) {
  GradedRecord r;
  r.submission_id = j.at("submission_id").get<std::string>();
  r.status = j.at("status").get<std::string>() == "ok" ? Status::Ok : Status::Failed;
  r.feedback = j.value("feedback", std::string{});
  r.attempts = j.value("attempts", 0);
  if (j.contains("usage")) r.usage = llm::UsageRecord::from_json(j["usage"]);
  r.example_ids = j.value("example_ids", std::vector<std::string>{});
  if (j.contains("predicted_percent")) {
    r.predicted_percent = j["predicted_percent"].get<double>();
  }
  if (j.contains("predicted_items")) {
    std::map<int, bool> items;
    for (const auto& [key, value] : j["predicted_items"].items()) {
      items[std::stoi(key)] = value.get<bool>();
    }
    r.predicted_items = std::move(items);
  }
  r.failure_reason = j.value("failure_reason", std::string{});
  r.last_raw = j.value("last_raw", std::string{});
  r.pool_truncated = j.value("pool_truncated", false);
  return r;
}

double rubric_score(const std::map<int, bool>& selections, const Rubric& rubric) {
  rubric.validate();
  const auto expected = rubric.item_numbers();
  std::vector<int> got;
  got.reserve(selections.size());
  for (const auto& [number, _] : selections) got.push_back(number);
  if (got != expected) {
    throw ValidationError("selection keys do not match the rubric's item numbers");
  }
  double selected_weight = 0.0;
  for (const auto& item : rubric.items()) {
    if (selections.at(item.number)) selected_weight += item.weight;
  }
  return 100.0 * selected_weight / rubric.total_weight();
}

namespace {

std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Per-target seed derivation keeps Random draws independent of worker
// scheduling, so runs are reproducible at any parallelism.
embeddings::SelectionStrategy effective_strategy(
    const embeddings::SelectionStrategy& strategy,
    const std::string& submission_id) {
  embeddings::SelectionStrategy s = strategy;
  if (s.kind == embeddings::SelectionStrategy::Kind::Random && s.seed) {
    s.seed = *s.seed ^ fnv1a64(submission_id);
  }
  return s;
}

GradedRecord failed_record(const corpus::Submission& target,
                           const std::string& reason) {
  GradedRecord record;
  record.submission_id = target.submission_id;
  record.status = GradedRecord::Status::Failed;
  record.failure_reason = reason;
  return record;
}

}  // namespace

GradedRecord grade_submission(const corpus::Dataset& dataset,
                              const corpus::Submission& target,
                              const RunConfig& config, const RunDeps& deps) {
  if (!deps.backend || !deps.tmpl) {
    throw ValidationError("run dependencies missing backend or template");
  }
  const corpus::Question& question = dataset.question(target.question_id);

  auto pool = corpus::example_pool(dataset, target.question_id, target.submission_id);
  if (config.rubric_mode) {
    // Only labeled submissions can serve as rubric examples.
    std::erase_if(pool, [](const corpus::Submission* s) { return !s->gold_items; });
  }

  embeddings::EmbeddingStore empty_store;
  const embeddings::EmbeddingStore& store = deps.store ? *deps.store : empty_store;
  auto selection = embeddings::select_examples(
      effective_strategy(config.strategy, target.submission_id), pool, target, store);

  GradedRecord record;
  record.submission_id = target.submission_id;
  record.pool_truncated = selection.pool_truncated;

  prompting::AssembledPrompt prompt;
  const Rubric* rubric = nullptr;
  if (config.rubric_mode) {
    if (!question.rubric) {
      throw ValidationError("rubric_mode requires a rubric on question \"" +
                            question.question_id + "\"");
    }
    rubric = &*question.rubric;
    std::vector<prompting::RubricExample> examples;
    for (const auto* s : selection.selected) {
      examples.push_back({s, *s->gold_items, std::nullopt});
    }
    prompt = prompting::build_rubric_prompt(*deps.tmpl, question, *rubric,
                                            examples, target);
  } else {
    std::vector<prompting::GradedExample> examples;
    for (const auto* s : selection.selected) {
      examples.push_back({s, s->gold_percent, std::nullopt});
    }
    prompt = prompting::build_grading_prompt(*deps.tmpl, question, examples, target);
  }
  record.example_ids = prompt.example_ids;

  try {
    if (config.rubric_mode) {
      std::function<llm::RubricParse(const std::string&)> parser =
          [rubric](const std::string& raw) {
            return llm::parse_rubric_response(raw, *rubric);
          };
      auto outcome = llm::grade_with_retry<llm::RubricResult>(
          prompt.text, config.model, parser, *deps.backend);
      record.usage = outcome.usage;
      record.attempts = outcome.attempts;
      if (outcome.ok()) {
        record.status = GradedRecord::Status::Ok;
        record.predicted_items = outcome.result->selections;
        record.feedback = outcome.result->feedback;
      } else {
        record.failure_reason = llm::reason_code(outcome.failure->reason);
        record.last_raw = outcome.last_raw;
      }
    } else {
      std::function<llm::GradeParse(const std::string&)> parser =
          [](const std::string& raw) { return llm::parse_grade_response(raw); };
      auto outcome = llm::grade_with_retry<llm::GradeResult>(
          prompt.text, config.model, parser, *deps.backend);
      record.usage = outcome.usage;
      record.attempts = outcome.attempts;
      if (outcome.ok()) {
        record.status = GradedRecord::Status::Ok;
        record.predicted_percent = static_cast<double>(outcome.result->grade);
        record.feedback = outcome.result->feedback;
      } else {
        record.failure_reason = llm::reason_code(outcome.failure->reason);
        record.last_raw = outcome.last_raw;
      }
    }
  } catch (const TransportError& e) {
    record.status = GradedRecord::Status::Failed;
    record.failure_reason = std::string("transport: ") + e.what();
  }

  if (deps.prices) {
    record.usage.estimated_cost =
        deps.prices->cost(config.model.model_name, record.usage);
  }
  return record;
}

RunResult grade_batch(const corpus::Dataset& dataset, const RunConfig& config,
                      const RunDeps& deps) {
  config.validate();
  const corpus::Dataset* scope = &dataset;
  corpus::Dataset sampled;
  if (config.sample_size) {
    sampled = sample_subset(dataset, *config.sample_size,
                            config.sample_seed.value_or(0));
    scope = &sampled;
  }

  if (config.rubric_mode) {
    for (const auto& q : scope->questions()) {
      if (!q.rubric) {
        throw ValidationError("rubric_mode requires a rubric on every question; \"" +
                              q.question_id + "\" has none");
      }
    }
  }

  // Cache fill is single-writer: embeddings are computed up front, before
  // the read-only parallel phase.
  if (config.strategy.kind == embeddings::SelectionStrategy::Kind::Rag) {
    if (!deps.store || !deps.embedder) {
      throw ValidationError("RAG strategy requires an embedding backend and store");
    }
    for (const auto& s : scope->submissions()) {
      if (!deps.store->contains(s.submission_id)) {
        deps.store->put(s.submission_id, deps.embedder->embed(s.response_text));
      }
    }
  }

  RunResult run;
  run.config = config;
  run.started = iso8601_now();
  const auto& submissions = scope->submissions();
  run.records.resize(submissions.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    while (!aborted.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= submissions.size()) return;
      try {
        run.records[i] = grade_submission(*scope, submissions[i], config, deps);
      } catch (const AuthError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        aborted.store(true);
        return;
      } catch (const std::exception& e) {
        run.records[i] = failed_record(submissions[i], e.what());
      }
    }
  };

  const std::size_t thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(config.parallelism), std::max<std::size_t>(submissions.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (std::size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  run.finished = iso8601_now();
  for (const auto& record : run.records) run.totals += record.usage;
  return run;
}

corpus::Dataset sample_subset(const corpus::Dataset& dataset, std::size_t n,
                              std::uint64_t seed) {
  const auto& submissions = dataset.submissions();
  if (n > submissions.size()) {
    throw ValidationError("sample size " + std::to_string(n) +
                          " exceeds population " + std::to_string(submissions.size()));
  }
  std::vector<std::size_t> indices(submissions.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + gen() % (indices.size() - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());  // keep dataset order

  std::vector<corpus::Submission> picked;
  picked.reserve(n);
  std::set<std::string> referenced;
  for (std::size_t i : indices) {
    picked.push_back(submissions[i]);
    referenced.insert(submissions[i].question_id);
  }
  std::vector<corpus::Question> questions;
  for (const auto& q : dataset.questions()) {
    if (referenced.count(q.question_id)) questions.push_back(q);
  }
  return corpus::Dataset(dataset.name(), std::move(questions), std::move(picked),
                         dataset.scale());
}

void save_run(const RunResult& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json", std::ios::binary);
    out << run.config.to_json().dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "records.jsonl", std::ios::binary);
    for (const auto& record : run.records) out << record.to_json().dump() << "\n";
  }
  {
    json usage{{"started", run.started},
               {"finished", run.finished},
               {"totals", run.totals.to_json()}};
    std::ofstream out(dir / "usage.json", std::ios::binary);
    out << usage.dump(2) << "\n";
  }
}

RunResult load_run(const std::filesystem::path& dir) {
  RunResult run;
  {
    std::ifstream in(dir / "config.json");
    if (!in) throw ValidationError("run directory " + dir.string() + " has no config.json");
    run.config = RunConfig::from_json(json::parse(in));
  }
  {
    std::ifstream in(dir / "records.jsonl");
    if (!in) throw ValidationError("run directory " + dir.string() + " has no records.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      run.records.push_back(GradedRecord::from_json(json::parse(line)));
    }
  }
  std::ifstream usage_in(dir / "usage.json");
  if (usage_in) {
    json usage = json::parse(usage_in);
    run.started = usage.value("started", std::string{});
    run.finished = usage.value("finished", std::string{});
    if (usage.contains("totals")) {
      run.totals = llm::UsageRecord::from_json(usage["totals"]);
    }
  }
  return run;
}

}  // namespace asag::engine
