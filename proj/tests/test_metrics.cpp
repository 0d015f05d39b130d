#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "cascnn/metrics.hpp"
#include "cascnn/train.hpp"
#include "oracles.hpp"

using namespace cascnn;

namespace {

// A small prepared dataset built straight from tensors: 8 days x 10 intervals
// x 3 stations with deterministic pseudo-random counts.
PreparedData tiny_prepared(double mask_threshold = 2.0) {
  const std::size_t days = 8, n = 3;
  std::vector<std::string> dates;
  std::int64_t epoch_day = parse_date("2024-03-04");
  for (std::size_t d = 0; d < days; ++d) dates.push_back(format_date(epoch_day + d));
  TimeGrid grid(std::move(dates), 5 * 60, 10 * 60, 30);  // 10 intervals per day

  OdTensor od(days, grid.intervals_per_day(), n);
  FlowSeries flows(days, grid.intervals_per_day(), n);
  std::mt19937_64 rng(2717);
  std::uniform_int_distribution<int> count(0, 8);
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t t = 0; t < grid.intervals_per_day(); ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          od.at(d, t, i, j) = count(rng);
        }
        flows.inflow(d, t, i) = od.row_sum(d, t, i);
      }
      for (std::size_t j = 0; j < n; ++j) flows.outflow(d, t, j) = od.col_sum(d, t, j);
    }
  }

  PipelineConfig config;
  config.history_days = 2;
  config.flow_steps = 2;
  config.mask_threshold = mask_threshold;
  config.split_seed = 5;
  return prepare_from_tensors(std::move(grid), std::move(od), std::move(flows), config);
}

std::unique_ptr<Model> tiny_model(const PreparedData& data) {
  ModelConfig config;
  config.n = data.n;
  config.history_days = 2;
  config.flow_steps = 2;
  config.filters_layer1 = 3;
  return build_model("cascnn", config, 77);
}

}  // namespace

TEST_CASE("worked metric example: targets {2,4}, preds {1,5}") {
  MetricAccumulator acc;
  acc.add(1.0, 2.0, 1.0);
  acc.add(5.0, 4.0, 1.0);
  MetricReport report = acc.finalize("overall");
  CHECK(report.rmse == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.mae == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(report.wmape_defined);
  CHECK(report.wmape == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("perfect predictions score zero everywhere") {
  MetricAccumulator acc;
  acc.add(3.0, 3.0, 1.0);
  acc.add(0.0, 0.0, 1.0);
  MetricReport report = acc.finalize("overall");
  CHECK(report.rmse == 0.0);
  CHECK(report.mae == 0.0);
  CHECK(report.wmape == 0.0);
}

TEST_CASE("zero-target cells enter RMSE/MAE but not WMAPE") {
  MetricAccumulator acc;
  acc.add(2.0, 0.0, 1.0);  // error 2 on a zero target
  acc.add(3.0, 4.0, 1.0);  // error 1 on a positive target
  MetricReport report = acc.finalize("overall");
  CHECK(report.cells == 2);
  CHECK(report.positive_cells == 1);
  CHECK(report.mae == doctest::Approx(1.5));
  // WMAPE pools |error| over positive-target cells only.
  CHECK(report.wmape == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("masked cells never reach the accumulator") {
  MetricAccumulator acc;
  acc.add(100.0, 0.0, 0.0);
  acc.add(1.0, 1.0, 1.0);
  MetricReport report = acc.finalize("overall");
  CHECK(report.cells == 1);
  CHECK(report.rmse == 0.0);
}

TEST_CASE("empty scope raises") {
  MetricAccumulator acc;
  CHECK_THROWS_AS(acc.finalize("overall"), EmptyScopeError);
}

TEST_CASE("metric properties on random scopes") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> target_dist(0.0, 12.0);
  std::uniform_real_distribution<double> err_dist(-3.0, 3.0);

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> preds, targets;
    MetricAccumulator acc;
    MetricAccumulator part1, part2;
    for (int i = 0; i < 40; ++i) {
      const double target = std::round(target_dist(rng));
      const double pred = std::max(0.0, target + err_dist(rng));
      acc.add(pred, target, 1.0);
      (i % 2 == 0 ? part1 : part2).add(pred, target, 1.0);
      preds.push_back(pred);
      targets.push_back(target);
    }
    MetricReport report = acc.finalize("overall");

    // RMSE >= MAE (power-mean inequality).
    CHECK(report.rmse >= report.mae - 1e-12);

    // WMAPE identity: MAE over positive cells x positive count / target sum.
    double abs_positive = 0.0;
    std::size_t positive = 0;
    double target_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      target_sum += targets[i];
      if (targets[i] > 0.0) {
        abs_positive += std::abs(targets[i] - preds[i]);
        ++positive;
      }
    }
    if (target_sum > 0.0 && positive > 0) {
      const double mae_positive = abs_positive / static_cast<double>(positive);
      const double identity = mae_positive * static_cast<double>(positive) / target_sum;
      CHECK(report.wmape == doctest::Approx(identity).epsilon(1e-12));
    }

    // Order invariance / partition additivity: the two interleaved halves
    // merge back to the full scope.
    MetricAccumulator merged;
    merged.merge(part2);
    merged.merge(part1);
    MetricReport remerged = merged.finalize("overall");
    CHECK(remerged.rmse == doctest::Approx(report.rmse).epsilon(1e-12));
    CHECK(remerged.mae == doctest::Approx(report.mae).epsilon(1e-12));
  }
}

TEST_CASE("denormalization scales RMSE and MAE linearly, WMAPE not at all") {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const Scaler scaler{0.0, 37.5};
  MetricAccumulator raw, norm;
  for (int i = 0; i < 30; ++i) {
    const double t = dist(rng);
    const double p = dist(rng);
    norm.add(p, t, 1.0);
    raw.add(scaler.invert(p), scaler.invert(t), 1.0);
  }
  MetricReport raw_report = raw.finalize("raw");
  MetricReport norm_report = norm.finalize("norm");
  const double span = scaler.max - scaler.min;
  CHECK(raw_report.rmse == doctest::Approx(norm_report.rmse * span).epsilon(1e-9));
  CHECK(raw_report.mae == doctest::Approx(norm_report.mae * span).epsilon(1e-9));
  CHECK(raw_report.wmape == doctest::Approx(norm_report.wmape).epsilon(1e-9));
}

TEST_CASE("pearson correlation oracle cases") {
  const std::vector<double> xs{1.0, 2.0, 3.0};
  const std::vector<double> ys{2.0, 4.0, 6.0};
  auto r = pearson(xs, ys);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> flat{1.0, 1.0, 1.0};
  CHECK(!pearson(xs, flat).has_value());

  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(10), b(10);
    for (std::size_t i = 0; i < 10; ++i) {
      a[i] = dist(rng);
      b[i] = dist(rng);
    }
    auto got = pearson(a, b);
    REQUIRE(got.has_value());
    CHECK(*got == doctest::Approx(oracles::pearson_direct(a, b)).epsilon(1e-9));
    CHECK(*got >= -1.0 - 1e-12);
    CHECK(*got <= 1.0 + 1e-12);
  }
}

TEST_CASE("evaluate pools test samples and scores the historical average alongside") {
  PreparedData data = tiny_prepared(-1.0);  // keep every cell
  std::unique_ptr<Model> model = tiny_model(data);
  EvalResult result = evaluate(*model, data);

  CHECK(result.skipped_samples == 0);
  CHECK(result.model_overall.cells ==
        data.split.test.size() * data.n * data.n);
  CHECK(result.ha_overall.cells == result.model_overall.cells);
  CHECK(result.model_overall.rmse >= result.model_overall.mae);

  SUBCASE("single-interval scope equals the overall pool") {
    EvalOptions options;
    options.per_interval = true;
    EvalResult per = evaluate(*model, data, options);
    // Partition additivity: per-interval squared-error sums reassemble the
    // overall mean.
    double sq_sum = 0.0;
    std::size_t cells = 0;
    for (const IntervalMetrics& im : per.per_interval) {
      sq_sum += im.report.mse * static_cast<double>(im.report.cells);
      cells += im.report.cells;
    }
    CHECK(cells == per.model_overall.cells);
    CHECK(sq_sum / static_cast<double>(cells) ==
          doctest::Approx(per.model_overall.mse).epsilon(1e-12));
    // Only one distinct day-interval group per interval id here, so a group
    // with every test cell of that interval equals its own pooled report.
    REQUIRE(!per.per_interval.empty());
  }
}

TEST_CASE("pair series reproduce the denormalized forward outputs") {
  PreparedData data = tiny_prepared(-1.0);
  std::unique_ptr<Model> model = tiny_model(data);
  EvalOptions options;
  options.pairs = {{0, 1}};
  EvalResult result = evaluate(*model, data, options);
  REQUIRE(result.pair_series.size() == 1);
  const OdPairSeries& series = result.pair_series[0];
  CHECK(series.points.size() == data.split.test.size());

  // Recomputation oracle: each point equals the clipped, denormalized forward
  // output at its (day, interval).
  for (const OdPairPoint& point : series.points) {
    const Sample* sample = nullptr;
    for (const Sample& candidate : data.split.test) {
      if (candidate.day == point.day && candidate.interval == point.interval) {
        sample = &candidate;
      }
    }
    REQUIRE(sample != nullptr);
    Tensor pred = model->forward(sample->history, sample->inflow_win, sample->outflow_win);
    const double expected = std::max(0.0, data.od_scaler.invert(pred.at(0, 1)));
    CHECK(point.predicted == expected);
    CHECK(point.actual == static_cast<double>(data.od.at(point.day, point.interval, 0, 1)));
  }

  SUBCASE("unknown pairs are lookup errors") {
    EvalOptions bad;
    bad.pairs = {{0, 9}};
    CHECK_THROWS_AS(evaluate(*model, data, bad), DataError);
  }
  SUBCASE("a fully masked pair yields an empty series") {
    PreparedData masked = tiny_prepared(1e9);  // mask everything
    EvalOptions pair_options;
    pair_options.pairs = {{0, 1}};
    // Every sample is skipped, so the overall scope is empty.
    CHECK_THROWS_AS(evaluate(*model, masked, pair_options), EmptyScopeError);
  }
  SUBCASE("diagonal pair stays masked while off-diagonal cells survive") {
    PreparedData thresholded = tiny_prepared(2.0);
    EvalOptions pair_options;
    pair_options.pairs = {{1, 1}};  // self-trips never occur, so always masked
    EvalResult thresholded_result = evaluate(*model, thresholded, pair_options);
    REQUIRE(thresholded_result.pair_series.size() == 1);
    CHECK(thresholded_result.pair_series[0].points.empty());
    CHECK(thresholded_result.pair_series[0].masked_intervals > 0);
  }
}

TEST_CASE("historical average equals the ODAD table and beats the zero predictor") {
  std::mt19937_64 rng(64);
  const std::size_t days = 6, intervals = 4, n = 3;
  OdTensor od(days, intervals, n);
  std::uniform_int_distribution<int> count(0, 9);
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t t = 0; t < intervals; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) od.at(d, t, i, j) = count(rng);
      }
    }
  }
  std::vector<std::size_t> all_days(days);
  std::iota(all_days.begin(), all_days.end(), 0);
  OdadTable table = compute_odad(od, all_days);
  HistoricalAverage ha(table);

  for (std::size_t t = 0; t < intervals; ++t) {
    Tensor pred = ha.predict(t);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) CHECK(pred.at(i, j) == table.at(t, i, j));
    }
  }

  // Variance decomposition: against its own training data, the mean predictor
  // can never lose to the zero predictor on cells with positive means.
  double ha_sq = 0.0, zero_sq = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t t = 0; t < intervals; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double actual = static_cast<double>(od.at(d, t, i, j));
          ha_sq += (actual - table.at(t, i, j)) * (actual - table.at(t, i, j));
          zero_sq += actual * actual;
        }
      }
    }
  }
  CHECK(ha_sq <= zero_sq);
}
