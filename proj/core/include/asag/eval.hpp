#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asag/corpus.hpp"
#include "asag/engine.hpp"

namespace asag::eval {

struct PairedScores {
  // (predicted_percent, gold_percent), both in [0,100]
  std::vector<std::pair<double, double>> pairs;

  std::size_t size() const { return pairs.size(); }
  std::vector<double> abs_errors() const;
};

struct QuartileSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  nlohmann::json to_json() const;
  static QuartileSummary from_json(const nlohmann::json& j);
};

struct EvaluationReport {
  double rmse = 0.0;
  std::optional<double> pearson_r;  // empty when variance is degenerate
  QuartileSummary abs_error_quartiles;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::optional<std::map<int, double>> per_item_accuracy;
  std::optional<double> overall_item_accuracy;

  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& j);
};

struct TTestResult {
  double t = 0.0;
  double degrees_of_freedom = 0.0;
  double p_two_sided = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;

  nlohmann::json to_json() const;
};

// sqrt(mean (predicted - gold)^2). Throws on empty input.
double rmse(const PairedScores& scores);

// Sample Pearson correlation. Throws ValidationError when n < 2 or either
// side has zero variance (reported as undefined, never NaN).
double pearson_r(const PairedScores& scores);

// Five-number summary of |predicted - gold| using Tukey hinges with
// midpoint interpolation: the median splits the sorted data into halves
// (each including the middle element when n is odd) and q1/q3 are the
// medians of those halves.
QuartileSummary abs_error_stats(const PairedScores& scores);

QuartileSummary quartiles(std::vector<double> values);

struct ItemAccuracy {
  std::map<int, double> per_item;
  double overall = 0.0;
};

// Fraction of submissions where predicted[item] == gold[item], per item
// and over all (submission, item) cells. Lists must be aligned.
ItemAccuracy item_accuracy(const std::vector<std::map<int, bool>>& predicted,
                           const std::vector<std::map<int, bool>>& gold,
                           const Rubric& rubric);

// Unequal-variance (Welch) t statistic with Welch-Satterthwaite degrees
// of freedom by default; pooled=true gives the classic equal-variance
// variant for sensitivity checks. Two-sided p from the Student-t CDF.
TTestResult welch_t_test(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b,
                         bool pooled = false);

// Pairs ok records with gold scores; rubric-mode records are scored with
// the question's rubric weights first. Failed records are counted, not
// paired.
PairedScores paired_scores(const engine::RunResult& run,
                           const corpus::Dataset& gold);

EvaluationReport evaluate_run(const engine::RunResult& run,
                              const corpus::Dataset& gold);

struct ComparisonReport {
  EvaluationReport report_a;
  EvaluationReport report_b;
  TTestResult abs_error_ttest;  // sample_a = run_a errors, sample_b = run_b
  std::size_t n_common = 0;
  nlohmann::json config_a;  // carried for provenance
  nlohmann::json config_b;

  nlohmann::json to_json() const;
};

// Evaluates both runs on the intersection of their ok submission sets and
// t-tests the absolute errors. Throws on an empty intersection.
ComparisonReport compare_runs(const engine::RunResult& run_a,
                              const engine::RunResult& run_b,
                              const corpus::Dataset& gold, bool pooled = false);

// report.json + errors.csv (submission_id, abs_error) for external plots.
void write_report(const EvaluationReport& report, const engine::RunResult& run,
                  const corpus::Dataset& gold, const std::filesystem::path& dir);

}  // namespace asag::eval
