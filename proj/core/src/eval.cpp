#include "asag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "asag/errors.hpp"

namespace asag::eval {

using nlohmann::json;

std::vector<double> PairedScores::abs_errors() const {
  std::vector<double> errors;
  errors.reserve(pairs.size());
  for (const auto& [predicted, gold] : pairs) {
    errors.push_back(std::fabs(predicted - gold));
  }
  return errors;
}

json QuartileSummary::to_json() const {
  return {{"min", min}, {"q1", q1}, {"median", median}, {"q3", q3}, {"max", max}};
}

QuartileSummary QuartileSummary::from_json(const json& j) {
  return {j.at("min").get<double>(), j.at("q1").get<double>(),
          j.at("median").get<double>(), j.at("q3").get<double>(),
          j.at("max").get<double>()};
}

json EvaluationReport::to_json() const {
  json j{{"rmse", rmse},
         {"abs_error_quartiles", abs_error_quartiles.to_json()},
         {"n_ok", n_ok},
         {"n_failed", n_failed}};
  if (pearson_r) {
    j["pearson_r"] = *pearson_r;
  } else {
    j["pearson_r"] = nullptr;
    j["pearson_r_note"] = "undefined: zero variance or fewer than 2 pairs";
  }
  if (per_item_accuracy) {
    json items = json::object();
    for (const auto& [number, accuracy] : *per_item_accuracy) {
      items[std::to_string(number)] = accuracy;
    }
    j["per_item_accuracy"] = items;
  }
  if (overall_item_accuracy) j["overall_item_accuracy"] = *overall_item_accuracy;
  return j;
}

EvaluationReport EvaluationReport::from_json(const json& j) {
  EvaluationReport r;
  r.rmse = j.at("rmse").get<double>();
  if (j.contains("pearson_r") && !j["pearson_r"].is_null()) {
    r.pearson_r = j["pearson_r"].get<double>();
  }
  r.abs_error_quartiles = QuartileSummary::from_json(j.at("abs_error_quartiles"));
  r.n_ok = j.at("n_ok").get<std::size_t>();
  r.n_failed = j.at("n_failed").get<std::size_t>();
  if (j.contains("per_item_accuracy")) {
    std::map<int, double> items;
    for (const auto& [key, value] : j["per_item_accuracy"].items()) {
      items[std::stoi(key)] = value.get<double>();
    }
    r.per_item_accuracy = std::move(items);
  }
  if (j.contains("overall_item_accuracy")) {
    r.overall_item_accuracy = j["overall_item_accuracy"].get<double>();
  }
  return r;
}

json TTestResult::to_json() const {
  return {{"t", t},
          {"degrees_of_freedom", degrees_of_freedom},
          {"p_two_sided", p_two_sided},
          {"mean_a", mean_a},
          {"mean_b", mean_b}};
}

double rmse(const PairedScores& scores) {
  if (scores.pairs.empty()) throw ValidationError("rmse of an empty set");
  double sum = 0.0;
  for (const auto& [predicted, gold] : scores.pairs) {
    const double d = predicted - gold;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(scores.pairs.size()));
}

double pearson_r(const PairedScores& scores) {
  const std::size_t n = scores.pairs.size();
  if (n < 2) throw ValidationError("pearson_r needs at least 2 pairs");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : scores.pairs) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : scores.pairs) {
    sxy += (x - mean_x) * (y - mean_y);
    sxx += (x - mean_x) * (x - mean_x);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson_r undefined: zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

// Median of sorted[first, last).
double median_of(const std::vector<double>& sorted, std::size_t first,
                 std::size_t last) {
  const std::size_t n = last - first;
  const std::size_t mid = first + n / 2;
  if (n % 2 == 1) return sorted[mid];
  return (sorted[mid - 1] + sorted[mid]) / 2.0;
}

}  // namespace

QuartileSummary quartiles(std::vector<double> values) {
  if (values.empty()) throw ValidationError("quartiles of an empty set");
  std::sort(values.begin(), values.end());
  QuartileSummary q;
  q.min = values.front();
  q.max = values.back();
  const std::size_t n = values.size();
  q.median = median_of(values, 0, n);
  // Tukey hinges: odd n includes the middle element in both halves.
  const std::size_t lower_end = n % 2 == 1 ? n / 2 + 1 : n / 2;
  const std::size_t upper_start = n / 2;
  q.q1 = median_of(values, 0, lower_end);
  q.q3 = median_of(values, upper_start, n);
  return q;
}

QuartileSummary abs_error_stats(const PairedScores& scores) {
  return quartiles(scores.abs_errors());
}

ItemAccuracy item_accuracy(const std::vector<std::map<int, bool>>& predicted,
                           const std::vector<std::map<int, bool>>& gold,
                           const Rubric& rubric) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("predicted and gold item lists are misaligned");
  }
  if (predicted.empty()) {
    throw ValidationError("item_accuracy of an empty set");
  }
  const auto numbers = rubric.item_numbers();
  std::map<int, std::size_t> matches;
  for (int number : numbers) matches[number] = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (int number : numbers) {
      auto p = predicted[i].find(number);
      auto g = gold[i].find(number);
      if (p == predicted[i].end() || g == gold[i].end()) {
        throw ValidationError("submission " + std::to_string(i) +
                              " is missing rubric item " + std::to_string(number));
      }
      if (p->second == g->second) ++matches[number];
    }
  }
  ItemAccuracy result;
  std::size_t total_matches = 0;
  for (int number : numbers) {
    result.per_item[number] =
        static_cast<double>(matches[number]) / static_cast<double>(predicted.size());
    total_matches += matches[number];
  }
  result.overall = static_cast<double>(total_matches) /
                   static_cast<double>(predicted.size() * numbers.size());
  return result;
}

namespace {

void mean_and_var(const std::vector<double>& sample, double& mean, double& var) {
  const double n = static_cast<double>(sample.size());
  mean = 0.0;
  for (double x : sample) mean += x;
  mean /= n;
  var = 0.0;
  for (double x : sample) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
}

}  // namespace

TTestResult welch_t_test(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b, bool pooled) {
  if (sample_a.size() < 2 || sample_b.size() < 2) {
    throw ValidationError("t-test needs at least 2 observations per sample");
  }
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  TTestResult result;
  double va = 0.0, vb = 0.0;
  mean_and_var(sample_a, result.mean_a, va);
  mean_and_var(sample_b, result.mean_b, vb);
  if (va == 0.0 && vb == 0.0) {
    throw ValidationError("t-test undefined: both samples have zero variance");
  }
  double se;
  if (pooled) {
    const double pooled_var =
        ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
    result.degrees_of_freedom = na + nb - 2.0;
  } else {
    const double ra = va / na;
    const double rb = vb / nb;
    se = std::sqrt(ra + rb);
    result.degrees_of_freedom =
        (ra + rb) * (ra + rb) /
        (ra * ra / (na - 1.0) + rb * rb / (nb - 1.0));
  }
  result.t = (result.mean_a - result.mean_b) / se;
  boost::math::students_t dist(result.degrees_of_freedom);
  result.p_two_sided = 2.0 * boost::math::cdf(dist, -std::fabs(result.t));
  if (result.p_two_sided > 1.0) result.p_two_sided = 1.0;
  return result;
}

PairedScores paired_scores(const engine::RunResult& run,
                           const corpus::Dataset& gold) {
  PairedScores scores;
  for (const auto& record : run.records) {
    if (record.status != engine::GradedRecord::Status::Ok) continue;
    if (!gold.has_submission(record.submission_id)) continue;
    const auto& submission = gold.submission(record.submission_id);
    double predicted;
    if (record.predicted_items) {
      const auto& question = gold.question(submission.question_id);
      if (!question.rubric) {
        throw ValidationError("rubric-mode record \"" + record.submission_id +
                              "\" but question has no rubric");
      }
      predicted = engine::rubric_score(*record.predicted_items, *question.rubric);
    } else if (record.predicted_percent) {
      predicted = *record.predicted_percent;
    } else {
      continue;
    }
    scores.pairs.emplace_back(predicted, submission.gold_percent);
  }
  return scores;
}

EvaluationReport evaluate_run(const engine::RunResult& run,
                              const corpus::Dataset& gold) {
  EvaluationReport report;
  PairedScores scores = paired_scores(run, gold);
  for (const auto& record : run.records) {
    if (record.status == engine::GradedRecord::Status::Ok) {
      ++report.n_ok;
    } else {
      ++report.n_failed;
    }
  }
  if (scores.pairs.empty()) {
    throw ValidationError("no ok records overlap the gold dataset");
  }
  report.rmse = rmse(scores);
  try {
    report.pearson_r = pearson_r(scores);
  } catch (const ValidationError&) {
    report.pearson_r.reset();
  }
  report.abs_error_quartiles = abs_error_stats(scores);

  if (run.config.rubric_mode) {
    std::vector<std::map<int, bool>> predicted, gold_items;
    const Rubric* rubric = nullptr;
    for (const auto& record : run.records) {
      if (record.status != engine::GradedRecord::Status::Ok ||
          !record.predicted_items || !gold.has_submission(record.submission_id)) {
        continue;
      }
      const auto& submission = gold.submission(record.submission_id);
      if (!submission.gold_items) continue;
      const auto& question = gold.question(submission.question_id);
      if (!rubric) rubric = &*question.rubric;
      predicted.push_back(*record.predicted_items);
      gold_items.push_back(*submission.gold_items);
    }
    if (rubric && !predicted.empty()) {
      ItemAccuracy accuracy = item_accuracy(predicted, gold_items, *rubric);
      report.per_item_accuracy = accuracy.per_item;
      report.overall_item_accuracy = accuracy.overall;
    }
  }
  return report;
}

namespace {

// Restricts a run to the given submission ids, keeping record order.
engine::RunResult restrict_run(const engine::RunResult& run,
                               const std::set<std::string>& keep) {
  engine::RunResult out;
  out.config = run.config;
  for (const auto& record : run.records) {
    if (keep.count(record.submission_id)) out.records.push_back(record);
  }
  return out;
}

}  // namespace

ComparisonReport compare_runs(const engine::RunResult& run_a,
                              const engine::RunResult& run_b,
                              const corpus::Dataset& gold, bool pooled) {
  std::set<std::string> ok_a, common;
  for (const auto& r : run_a.records) {
    if (r.status == engine::GradedRecord::Status::Ok) ok_a.insert(r.submission_id);
  }
  for (const auto& r : run_b.records) {
    if (r.status == engine::GradedRecord::Status::Ok && ok_a.count(r.submission_id)) {
      common.insert(r.submission_id);
    }
  }
  if (common.empty()) {
    throw ValidationError("runs share no successfully graded submissions");
  }
  ComparisonReport report;
  report.n_common = common.size();
  engine::RunResult a = restrict_run(run_a, common);
  engine::RunResult b = restrict_run(run_b, common);
  report.report_a = evaluate_run(a, gold);
  report.report_b = evaluate_run(b, gold);
  report.abs_error_ttest = welch_t_test(paired_scores(a, gold).abs_errors(),
                                        paired_scores(b, gold).abs_errors(), pooled);
  report.config_a = run_a.config.to_json();
  report.config_b = run_b.config.to_json();
  return report;
}

json ComparisonReport::to_json() const {
  return {{"run_a", report_a.to_json()},
          {"run_b", report_b.to_json()},
          {"abs_error_ttest", abs_error_ttest.to_json()},
          {"n_common", n_common},
          {"config_a", config_a},
          {"config_b", config_b}};
}

void write_report(const EvaluationReport& report, const engine::RunResult& run,
                  const corpus::Dataset& gold, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << report.to_json().dump(2) << "\n";
  }
  std::ofstream csv(dir / "errors.csv", std::ios::binary);
  csv << "submission_id,abs_error\n";
  for (const auto& record : run.records) {
    if (record.status != engine::GradedRecord::Status::Ok ||
        !gold.has_submission(record.submission_id)) {
      continue;
    }
    const auto& submission = gold.submission(record.submission_id);
    double predicted;
    if (record.predicted_items) {
      predicted = engine::rubric_score(*record.predicted_items,
                                       *gold.question(submission.question_id).rubric);
    } else if (record.predicted_percent) {
      predicted = *record.predicted_percent;
    } else {
      continue;
    }
    csv << record.submission_id << "," << std::fabs(predicted - submission.gold_percent)
        << "\n";
  }
}

}  // namespace asag::eval
