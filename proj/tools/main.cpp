// asag: grade short-answer datasets with an LLM backend and evaluate the
// results. Subcommands: ingest, grade, eval, compare.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asag/corpus.hpp"
#include "asag/embeddings.hpp"
#include "asag/engine.hpp"
#include "asag/errors.hpp"
#include "asag/eval.hpp"
#include "asag/llm.hpp"
#include "asag/prompting.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct AppConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string embedding_base_url = "https://api.openai.com/v1";
  std::string embedding_model = "text-embedding-3-small";
  std::string embedding_api_key_env = "OPENAI_API_KEY";
  std::string price_table_path;
  std::string default_template_path;
  std::string cache_dir = ".asag-cache";
  int parallelism = 4;

  static AppConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw asag::ValidationError("cannot open config file " + path);
    json j = json::parse(in);
    AppConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    if (j.contains("embedding")) {
      const json& e = j["embedding"];
      c.embedding_base_url = e.value("base_url", c.embedding_base_url);
      c.embedding_model = e.value("model", c.embedding_model);
      c.embedding_api_key_env = e.value("api_key_env", c.embedding_api_key_env);
    }
    c.price_table_path = j.value("price_table", c.price_table_path);
    c.default_template_path = j.value("default_template", c.default_template_path);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.parallelism = j.value("parallelism", c.parallelism);
    return c;
  }
};

std::string require_env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (!value || !*value) {
    throw asag::AuthError("environment variable " + name +
                          " is not set (required for live backends)");
  }
  return value;
}

asag::corpus::Dataset load_dataset_with_descriptor(const std::string& dataset_path,
                                                   const std::string& descriptor_path) {
  auto descriptor = asag::corpus::load_descriptor(descriptor_path);
  return asag::corpus::load_dataset(dataset_path, descriptor.scale, descriptor.name);
}

int cmd_ingest(const std::string& source, const std::string& descriptor_path,
               const std::string& out_path) {
  auto dataset = load_dataset_with_descriptor(source, descriptor_path);
  asag::corpus::save_dataset(dataset, out_path);
  std::cout << "ingested dataset \"" << dataset.name() << "\": "
            << dataset.questions().size() << " questions, "
            << dataset.submissions().size() << " submissions -> " << out_path
            << "\n";
  return kExitOk;
}

struct GradeOptions {
  std::string dataset_path;
  std::string descriptor_path;
  std::string out_dir;
  std::string strategy = "none";
  std::size_t k = 5;
  std::optional<std::uint64_t> seed;
  std::string model = "gpt-4o-2024-08-06";
  bool rubric = false;
  std::optional<std::size_t> sample;
  std::optional<std::uint64_t> sample_seed;
  std::string mock_script;
  std::string template_path;
  std::optional<int> parallelism;
  std::string config_path;
  std::optional<double> temperature;
  int max_attempts = 3;
};

int cmd_grade(const GradeOptions& opt) {
  AppConfig app;
  if (!opt.config_path.empty()) app = AppConfig::load(opt.config_path);

  auto dataset = load_dataset_with_descriptor(opt.dataset_path, opt.descriptor_path);

  asag::engine::RunConfig config;
  config.dataset_name = dataset.name();
  // Seeds default deterministically and are persisted in config.json, so
  // every run is re-runnable as executed.
  config.strategy = asag::embeddings::SelectionStrategy::parse(
      opt.strategy, opt.k, opt.seed ? opt.seed : std::optional<std::uint64_t>(0));
  config.model.model_name = opt.mock_script.empty() ? opt.model : "mock";
  config.model.temperature = opt.temperature ? opt.temperature : std::optional<double>(0.0);
  config.model.max_attempts = opt.max_attempts;
  config.rubric_mode = opt.rubric;
  config.parallelism = opt.parallelism.value_or(app.parallelism);
  config.sample_size = opt.sample;
  if (opt.sample) config.sample_seed = opt.sample_seed.value_or(0);

  asag::prompting::PromptTemplate tmpl;
  if (!opt.template_path.empty()) {
    tmpl = asag::prompting::PromptTemplate::load(opt.template_path);
  } else if (!app.default_template_path.empty()) {
    tmpl = asag::prompting::PromptTemplate::load(app.default_template_path);
  } else {
    tmpl = opt.rubric ? asag::prompting::PromptTemplate::builtin_rubric()
                      : asag::prompting::PromptTemplate::builtin_grading();
  }
  config.template_id = tmpl.template_id;

  std::unique_ptr<asag::llm::CompletionBackend> backend;
  std::unique_ptr<asag::embeddings::EmbeddingBackend> embedder;
  const bool mock = !opt.mock_script.empty();
  if (mock) {
    backend = asag::llm::MockCompletionBackend::from_script(opt.mock_script);
    embedder = std::make_unique<asag::embeddings::MockEmbeddingBackend>();
  } else {
    // Fail on missing credentials before any request is issued.
    asag::llm::HttpCompletionConfig http;
    http.base_url = app.base_url;
    http.api_key = require_env(app.api_key_env);
    backend = std::make_unique<asag::llm::HttpCompletionBackend>(http);
    asag::embeddings::HttpEmbeddingConfig emb;
    emb.base_url = app.embedding_base_url;
    emb.model = app.embedding_model;
    emb.api_key = require_env(app.embedding_api_key_env);
    embedder = std::make_unique<asag::embeddings::HttpEmbeddingBackend>(emb);
  }

  asag::llm::PriceTable prices;
  if (!app.price_table_path.empty()) {
    prices = asag::llm::PriceTable::load(app.price_table_path);
  }

  asag::embeddings::EmbeddingStore store(0, embedder->tag());
  std::filesystem::path cache_file;
  const bool use_rag =
      config.strategy.kind == asag::embeddings::SelectionStrategy::Kind::Rag;
  if (use_rag) {
    std::filesystem::create_directories(app.cache_dir);
    cache_file = std::filesystem::path(app.cache_dir) /
                 (dataset.name() + ".embeddings.jsonl");
    store.load_cache(cache_file);
  }

  std::cout << "run config: " << config.to_json().dump() << "\n";

  asag::engine::RunDeps deps;
  deps.backend = backend.get();
  deps.embedder = embedder.get();
  deps.store = &store;
  deps.tmpl = &tmpl;
  deps.prices = &prices;

  auto run = asag::engine::grade_batch(dataset, config, deps);
  asag::engine::save_run(run, opt.out_dir);
  if (use_rag) store.save_cache(cache_file);

  std::size_t failed = 0;
  for (const auto& r : run.records) {
    if (r.status == asag::engine::GradedRecord::Status::Failed) ++failed;
  }
  std::cout << "graded " << run.records.size() << " submissions (" << failed
            << " failed), estimated cost $" << run.totals.estimated_cost
            << " -> " << opt.out_dir << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& run_dir, const std::string& dataset_path,
             const std::string& descriptor_path, const std::string& out_dir) {
  auto dataset = load_dataset_with_descriptor(dataset_path, descriptor_path);
  auto run = asag::engine::load_run(run_dir);
  auto report = asag::eval::evaluate_run(run, dataset);
  const std::string target = out_dir.empty() ? run_dir : out_dir;
  asag::eval::write_report(report, run, dataset, target);
  std::cout << report.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& run_a_dir, const std::string& run_b_dir,
                const std::string& dataset_path, const std::string& descriptor_path,
                bool pooled, const std::string& out_path) {
  auto dataset = load_dataset_with_descriptor(dataset_path, descriptor_path);
  auto run_a = asag::engine::load_run(run_a_dir);
  auto run_b = asag::engine::load_run(run_b_dir);
  auto report = asag::eval::compare_runs(run_a, run_b, dataset, pooled);
  const std::string text = report.to_json().dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    out << text << "\n";
  }
  std::cout << text << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-based short answer grading pipeline"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a dataset");
  std::string ingest_source, ingest_descriptor, ingest_out;
  ingest->add_option("source", ingest_source, "Source JSONL file")->required();
  ingest->add_option("--descriptor", ingest_descriptor, "Dataset descriptor JSON")
      ->required();
  ingest->add_option("--out", ingest_out, "Output JSONL path")->required();

  // grade
  auto* grade = app.add_subcommand("grade", "Grade a dataset into a run directory");
  GradeOptions opt;
  grade->add_option("dataset", opt.dataset_path, "Normalized dataset JSONL")->required();
  grade->add_option("--descriptor", opt.descriptor_path, "Dataset descriptor JSON")
      ->required();
  grade->add_option("--out", opt.out_dir, "Run output directory")->required();
  grade->add_option("--strategy", opt.strategy, "Example selection: none|random|rag");
  grade->add_option("--k", opt.k, "Examples per prompt (default 5)");
  grade->add_option("--seed", opt.seed, "Selection seed (random strategy)");
  grade->add_option("--model", opt.model, "Model name for the live backend");
  grade->add_flag("--rubric", opt.rubric, "Rubric-based grading");
  grade->add_option("--sample", opt.sample, "Grade a random subsample of this size");
  grade->add_option("--sample-seed", opt.sample_seed, "Subsample seed");
  grade->add_option("--mock", opt.mock_script, "Mock backend script (offline run)");
  grade->add_option("--template", opt.template_path, "Prompt template file");
  grade->add_option("--parallelism", opt.parallelism, "In-flight request bound");
  grade->add_option("--config", opt.config_path, "App config JSON");
  grade->add_option("--temperature", opt.temperature, "Sampling temperature");
  grade->add_option("--max-attempts", opt.max_attempts, "Regrade budget per submission");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a run against gold scores");
  std::string eval_run, eval_dataset, eval_descriptor, eval_out;
  eval_cmd->add_option("run", eval_run, "Run directory")->required();
  eval_cmd->add_option("dataset", eval_dataset, "Normalized dataset JSONL")->required();
  eval_cmd->add_option("--descriptor", eval_descriptor, "Dataset descriptor JSON")
      ->required();
  eval_cmd->add_option("--out", eval_out, "Report directory (default: run dir)");

  // compare
  auto* compare = app.add_subcommand("compare", "Compare two runs with a t-test");
  std::string cmp_a, cmp_b, cmp_dataset, cmp_descriptor, cmp_out;
  bool cmp_pooled = false;
  compare->add_option("run_a", cmp_a, "First run directory")->required();
  compare->add_option("run_b", cmp_b, "Second run directory")->required();
  compare->add_option("dataset", cmp_dataset, "Normalized dataset JSONL")->required();
  compare->add_option("--descriptor", cmp_descriptor, "Dataset descriptor JSON")
      ->required();
  compare->add_flag("--pooled", cmp_pooled, "Pooled-variance t-test variant");
  compare->add_option("--out", cmp_out, "Write the comparison report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_source, ingest_descriptor, ingest_out);
    if (*grade) return cmd_grade(opt);
    if (*eval_cmd) return cmd_eval(eval_run, eval_dataset, eval_descriptor, eval_out);
    if (*compare) {
      return cmd_compare(cmp_a, cmp_b, cmp_dataset, cmp_descriptor, cmp_pooled,
                         cmp_out);
    }
  } catch (const asag::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
