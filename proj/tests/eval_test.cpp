#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "asag/errors.hpp"
#include "asag/eval.hpp"
#include "test_util.hpp"

using namespace asag;
using namespace asag::eval;

namespace {

PairedScores pairs(std::initializer_list<std::pair<double, double>> list) {
  PairedScores scores;
  scores.pairs = list;
  return scores;
}

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * ((gen() >> 11) * 0x1p-53);
}

}  // namespace

TEST_CASE("rmse basics") {
  CHECK(rmse(pairs({{70, 70}, {30, 30}})) == 0.0);
  CHECK(rmse(pairs({{80, 70}, {60, 60}})) ==
        doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(PairedScores{}), ValidationError);
}

TEST_CASE("rmse matches a naive loop oracle on random sets") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    PairedScores scores;
    const int n = 1 + gen() % 50;
    for (int i = 0; i < n; ++i) {
      scores.pairs.emplace_back(uniform(gen, 0, 100), uniform(gen, 0, 100));
    }
    double sum = 0.0;
    for (auto [p, g] : scores.pairs) sum += (p - g) * (p - g);
    CHECK(std::fabs(rmse(scores) - std::sqrt(sum / n)) < 1e-12);
  }
}

TEST_CASE("rmse is zero iff predictions equal gold") {
  auto scores = pairs({{10, 10}, {20, 20}, {30, 30}});
  CHECK(rmse(scores) == 0.0);
  scores.pairs[1].first += 1e-9;
  CHECK(rmse(scores) > 0.0);
}

TEST_CASE("pearson_r perfect correlation and anticorrelation") {
  CHECK(pearson_r(pairs({{10, 10}, {50, 50}, {90, 90}})) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson_r(pairs({{90, 10}, {50, 50}, {10, 90}})) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson_r reports zero variance instead of NaN") {
  CHECK_THROWS_AS(pearson_r(pairs({{50, 10}, {50, 90}})), ValidationError);
  CHECK_THROWS_AS(pearson_r(pairs({{50, 10}})), ValidationError);
}

TEST_CASE("pearson_r matches a naive two-pass oracle") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    PairedScores scores;
    const int n = 3 + gen() % 60;
    for (int i = 0; i < n; ++i) {
      scores.pairs.emplace_back(uniform(gen, 0, 100), uniform(gen, 0, 100));
    }
    double mx = 0, my = 0;
    for (auto [x, y] : scores.pairs) {
      mx += x;
      my += y;
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (auto [x, y] : scores.pairs) {
      num += (x - mx) * (y - my);
      dx += (x - mx) * (x - mx);
      dy += (y - my) * (y - my);
    }
    CHECK(std::fabs(pearson_r(scores) - num / std::sqrt(dx * dy)) < 1e-12);
  }
}

TEST_CASE("pearson_r is invariant under positive affine transforms") {
  std::mt19937_64 gen(3);
  PairedScores scores;
  for (int i = 0; i < 40; ++i) {
    scores.pairs.emplace_back(uniform(gen, 0, 100), uniform(gen, 0, 100));
  }
  const double base = pearson_r(scores);
  PairedScores transformed = scores;
  for (auto& [x, y] : transformed.pairs) {
    x = 2.5 * x + 7.0;
    y = 0.3 * y + 11.0;
  }
  CHECK(std::fabs(pearson_r(transformed) - base) < 1e-9);
}

TEST_CASE("abs_error_stats degenerate and hand-computed cases") {
  const auto single = abs_error_stats(pairs({{70, 70}}));
  CHECK(single.min == 0.0);
  CHECK(single.q1 == 0.0);
  CHECK(single.median == 0.0);
  CHECK(single.q3 == 0.0);
  CHECK(single.max == 0.0);

  // errors {0,10,20,30}
  const auto even = abs_error_stats(pairs({{10, 10}, {20, 10}, {40, 20}, {60, 30}}));
  CHECK(even.median == 15.0);
  CHECK(even.q1 == 5.0);
  CHECK(even.q3 == 25.0);
  CHECK(even.min == 0.0);
  CHECK(even.max == 30.0);
}

TEST_CASE("quartiles are non-decreasing on random inputs") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> values;
    const int n = 1 + gen() % 30;
    for (int i = 0; i < n; ++i) values.push_back(uniform(gen, 0, 100));
    const auto q = quartiles(values);
    CHECK(q.min <= q.q1);
    CHECK(q.q1 <= q.median);
    CHECK(q.median <= q.q3);
    CHECK(q.q3 <= q.max);
  }
}

TEST_CASE("item_accuracy identity, complement, and hand count") {
  const Rubric rubric = testutil::induction_rubric();
  std::vector<std::map<int, bool>> gold;
  for (int s = 0; s < 3; ++s) {
    std::map<int, bool> items;
    for (int i = 1; i <= 7; ++i) items[i] = ((s + i) % 2) == 0;
    gold.push_back(items);
  }
  auto identical = item_accuracy(gold, gold, rubric);
  CHECK(identical.overall == 1.0);
  for (const auto& [_, acc] : identical.per_item) CHECK(acc == 1.0);

  auto inverted = gold;
  for (auto& items : inverted) {
    for (auto& [_, v] : items) v = !v;
  }
  auto complement = item_accuracy(inverted, gold, rubric);
  CHECK(complement.overall == 0.0);

  // Flip 4 specific cells: overall = 17/21.
  auto predicted = gold;
  predicted[0][1] = !predicted[0][1];
  predicted[0][2] = !predicted[0][2];
  predicted[1][5] = !predicted[1][5];
  predicted[2][7] = !predicted[2][7];
  auto partial = item_accuracy(predicted, gold, rubric);
  CHECK(partial.overall == doctest::Approx(17.0 / 21.0).epsilon(1e-12));
  CHECK(partial.per_item[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(partial.per_item[3] == 1.0);

  // Overall equals the mean of per-item accuracies (equal counts).
  double mean = 0.0;
  for (const auto& [_, acc] : partial.per_item) mean += acc;
  CHECK(partial.overall == doctest::Approx(mean / 7.0).epsilon(1e-12));
}

TEST_CASE("item_accuracy rejects misaligned lists") {
  const Rubric rubric = testutil::induction_rubric();
  std::map<int, bool> full;
  for (int i = 1; i <= 7; ++i) full[i] = true;
  CHECK_THROWS_AS(item_accuracy({full, full}, {full}, rubric), ValidationError);
}

TEST_CASE("welch t-test of a sample against itself") {
  const std::vector<double> sample{1.0, 2.0, 3.0, 4.0};
  const auto result = welch_t_test(sample, sample);
  CHECK(result.t == 0.0);
  CHECK(result.p_two_sided == 1.0);
}

TEST_CASE("t sign matches the mean difference") {
  const std::vector<double> low{1.0, 1.1, 0.9, 1.05};
  const std::vector<double> high{5.0, 5.2, 4.8, 5.1};
  CHECK(welch_t_test(high, low).t > 0.0);
  CHECK(welch_t_test(low, high).t < 0.0);
}

TEST_CASE("welch t-test is antisymmetric") {
  const std::vector<double> a{12.1, 8.3, 15.7, 9.9, 11.4};
  const std::vector<double> b{18.5, 16.2, 21.0, 19.9};
  const auto ab = welch_t_test(a, b);
  const auto ba = welch_t_test(b, a);
  CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
  CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
}

TEST_CASE("welch t-test matches frozen reference-implementation values") {
  // Expected values computed once with an independent statistics package.
  const std::vector<double> a{12.1, 8.3, 15.7, 9.9, 11.4, 13.0, 7.8, 10.2};
  const std::vector<double> b{18.5, 16.2, 21.0, 19.9, 17.4, 20.3};
  const auto welch = welch_t_test(a, b);
  CHECK(std::fabs(welch.t - (-6.608547139558)) < 1e-6);
  CHECK(std::fabs(welch.degrees_of_freedom - 11.993212332324) < 1e-6);
  CHECK(std::fabs(welch.p_two_sided - 2.51338169441e-05) < 1e-4);

  const auto pooled = welch_t_test(a, b, /*pooled=*/true);
  CHECK(std::fabs(pooled.t - (-6.286125568890)) < 1e-6);
  CHECK(std::fabs(pooled.degrees_of_freedom - 12.0) < 1e-12);
  CHECK(std::fabs(pooled.p_two_sided - 4.03037734441e-05) < 1e-4);

  const std::vector<double> c{3.2, 3.9, 2.8, 4.4, 3.6, 3.1, 4.0};
  const std::vector<double> d{3.5, 3.3, 4.1, 2.9, 3.8, 3.4, 3.0, 3.7, 3.2};
  const auto welch2 = welch_t_test(c, d);
  CHECK(std::fabs(welch2.t - 0.551406536481) < 1e-6);
  CHECK(std::fabs(welch2.degrees_of_freedom - 10.133161417728) < 1e-6);
  CHECK(std::fabs(welch2.p_two_sided - 0.593304969684) < 1e-4);
}

TEST_CASE("t-test rejects undersized samples") {
  CHECK_THROWS_AS(welch_t_test({1.0}, {1.0, 2.0}), ValidationError);
}

namespace {

engine::RunResult fake_run(const corpus::Dataset& dataset, double offset) {
  engine::RunResult run;
  run.config.dataset_name = dataset.name();
  run.config.model.model_name = "mock";
  for (const auto& s : dataset.submissions()) {
    engine::GradedRecord r;
    r.submission_id = s.submission_id;
    r.status = engine::GradedRecord::Status::Ok;
    double predicted = s.gold_percent + offset;
    predicted = std::min(100.0, std::max(0.0, predicted));
    r.predicted_percent = predicted;
    r.attempts = 1;
    run.records.push_back(r);
  }
  return run;
}

}  // namespace

TEST_CASE("compare_runs against itself is reflexive") {
  const auto dataset = testutil::make_dataset(2, 10);
  const auto run = fake_run(dataset, 5.0);
  const auto report = compare_runs(run, run, dataset);
  CHECK(report.abs_error_ttest.t == 0.0);
  CHECK(report.report_a.rmse == report.report_b.rmse);
  CHECK(report.n_common == 20);
}

TEST_CASE("compare_runs sees injected error offsets") {
  const auto dataset = testutil::make_dataset(1, 9);  // gold in (0,100) interior
  auto exact = fake_run(dataset, 0.0);
  auto offset = fake_run(dataset, 8.0);
  // Spread the injected errors so the t-test has variance to work with;
  // the jitter sums to zero over the 9 records.
  for (std::size_t i = 0; i < offset.records.size(); ++i) {
    *offset.records[i].predicted_percent +=
        0.5 * (static_cast<double>(i % 3) - 1.0);
  }
  const auto report = compare_runs(exact, offset, dataset);
  CHECK(report.report_a.rmse == 0.0);
  CHECK(report.report_b.rmse ==
        doctest::Approx(std::sqrt(64.0 + 0.25 * 6.0 / 9.0)).epsilon(1e-9));
  CHECK(report.abs_error_ttest.mean_b - report.abs_error_ttest.mean_a ==
        doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("compare_runs drops failed records pairwise") {
  const auto dataset = testutil::make_dataset(1, 6);
  auto a = fake_run(dataset, 2.0);
  auto b = fake_run(dataset, 4.0);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const double jitter = 0.25 * static_cast<double>(i % 2);
    *a.records[i].predicted_percent += jitter;
    *b.records[i].predicted_percent += jitter;
  }
  a.records[0].status = engine::GradedRecord::Status::Failed;
  a.records[0].predicted_percent.reset();
  b.records[3].status = engine::GradedRecord::Status::Failed;
  b.records[3].predicted_percent.reset();
  const auto report = compare_runs(a, b, dataset);
  CHECK(report.n_common == 4);
}

TEST_CASE("evaluation report serializes and reloads losslessly") {
  const auto dataset = testutil::make_dataset(2, 8);
  const auto run = fake_run(dataset, 3.0);
  const auto report = evaluate_run(run, dataset);
  const auto reloaded = EvaluationReport::from_json(report.to_json());
  CHECK(reloaded.to_json() == report.to_json());
}

TEST_CASE("failed records never contribute scores") {
  const auto dataset = testutil::make_dataset(1, 5);
  auto run = fake_run(dataset, 0.0);
  run.records[2].status = engine::GradedRecord::Status::Failed;
  run.records[2].predicted_percent.reset();
  const auto report = evaluate_run(run, dataset);
  CHECK(report.n_ok == 4);
  CHECK(report.n_failed == 1);
  CHECK(report.rmse == 0.0);
}
