#include "cascnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cascnn/train.hpp"

namespace cascnn {

void MetricAccumulator::add(double pred, double target, double mask) {
  if (mask == 0.0) return;
  const double err = target - pred;
  ++cells_;
  sq_sum_ += err * err;
  abs_sum_ += std::abs(err);
  target_sum_ += target;
  if (target > 0.0) {
    ++positive_cells_;
    abs_sum_positive_ += std::abs(err);
    ratio_sum_ += std::abs(err) / target;
  }
}

void MetricAccumulator::add_matrix(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  if (pred.shape() != target.shape() || pred.shape() != mask.shape()) {
    throw DimensionError("metrics: prediction, target, and mask shapes must agree");
  }
  const double* pp = pred.data();
  const double* pt = target.data();
  const double* pm = mask.data();
  for (std::size_t i = 0; i < pred.size(); ++i) add(pp[i], pt[i], pm[i]);
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  cells_ += other.cells_;
  positive_cells_ += other.positive_cells_;
  sq_sum_ += other.sq_sum_;
  abs_sum_ += other.abs_sum_;
  abs_sum_positive_ += other.abs_sum_positive_;
  ratio_sum_ += other.ratio_sum_;
  target_sum_ += other.target_sum_;
}

MetricReport MetricAccumulator::finalize(std::string scope) const {
  if (cells_ == 0) throw EmptyScopeError("metric scope '" + scope + "' has no evaluated cells");
  MetricReport report;
  report.scope = std::move(scope);
  report.cells = cells_;
  report.positive_cells = positive_cells_;
  report.target_sum = target_sum_;
  report.mse = sq_sum_ / static_cast<double>(cells_);
  report.rmse = std::sqrt(report.mse);
  report.mae = abs_sum_ / static_cast<double>(cells_);
  if (target_sum_ > 0.0) {
    report.wmape = abs_sum_positive_ / target_sum_;
    report.wmape_defined = true;
  }
  if (positive_cells_ > 0) report.mape = ratio_sum_ / static_cast<double>(positive_cells_);
  // Power-mean inequality; a violation means the accumulator is broken.
  if (report.rmse + 1e-12 < report.mae) {
    throw NumericError("metric report '" + report.scope + "' has RMSE " +
                       std::to_string(report.rmse) + " < MAE " + std::to_string(report.mae));
  }
  return report;
}

Tensor HistoricalAverage::predict(std::size_t interval) const {
  if (interval >= table_.intervals) {
    throw DataError("historical average: interval " + std::to_string(interval) + " out of range");
  }
  Tensor out = Tensor::zeros({table_.stations, table_.stations});
  for (std::size_t i = 0; i < table_.stations; ++i) {
    for (std::size_t j = 0; j < table_.stations; ++j) out.at(i, j) = table_.at(interval, i, j);
  }
  return out;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

// Denormalized model prediction with negatives clipped to zero.
Tensor raw_prediction(Model& model, const Sample& sample, const Scaler& od_scaler,
                      std::size_t* clipped) {
  Tensor pred = model.forward(sample.history, sample.inflow_win, sample.outflow_win);
  Tensor raw = Tensor::zeros(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double v = od_scaler.invert(pred.values()[i]);
    if (v < 0.0) {
      v = 0.0;
      if (clipped) ++*clipped;
    }
    raw.values()[i] = v;
  }
  return raw;
}

}  // namespace

EvalResult evaluate(Model& model, const PreparedData& data, const EvalOptions& options) {
  EvalResult result;
  const HistoricalAverage ha(data.odad);
  const std::size_t n = data.n;

  MetricAccumulator model_acc, ha_acc;
  std::vector<MetricAccumulator> interval_acc(data.grid.intervals_per_day());

  for (const std::pair<std::size_t, std::size_t>& pair : options.pairs) {
    if (pair.first >= n || pair.second >= n) {
      throw DataError("unknown OD pair (" + std::to_string(pair.first) + "," +
                      std::to_string(pair.second) + ") for " + std::to_string(n) + " stations");
    }
    OdPairSeries series;
    series.origin = pair.first;
    series.destination = pair.second;
    result.pair_series.push_back(series);
  }

  for (const Sample& sample : data.split.test) {
    if (mask_kept_count(sample.mask) == 0) {
      ++result.skipped_samples;
      continue;
    }
    const Tensor raw_pred = raw_prediction(model, sample, data.od_scaler,
                                           &result.clipped_negative);
    const Tensor raw_target = data.raw_target(sample);
    model_acc.add_matrix(raw_pred, raw_target, sample.mask);
    interval_acc[sample.interval].add_matrix(raw_pred, raw_target, sample.mask);
    ha_acc.add_matrix(ha.predict(sample.interval), raw_target, sample.mask);

    for (OdPairSeries& series : result.pair_series) {
      if (sample.mask.at(series.origin, series.destination) == 0.0) {
        ++series.masked_intervals;
        continue;
      }
      OdPairPoint point;
      point.day = sample.day;
      point.interval = sample.interval;
      point.actual = raw_target.at(series.origin, series.destination);
      point.predicted = raw_pred.at(series.origin, series.destination);
      series.points.push_back(point);
    }
  }

  result.model_overall = model_acc.finalize("overall");
  result.ha_overall = ha_acc.finalize("overall");

  if (options.per_interval) {
    for (std::size_t t = 0; t < interval_acc.size(); ++t) {
      if (interval_acc[t].cells() == 0) continue;
      IntervalMetrics im;
      im.interval = t;
      im.report = interval_acc[t].finalize("interval " + std::to_string(t));
      result.per_interval.push_back(std::move(im));
    }
  }

  if (options.interpret) {
    auto* cascnn = dynamic_cast<CasCnn*>(&model);
    if (cascnn != nullptr && cascnn->has_gate()) {
      result.interpretability.available = true;
      std::vector<double> inflow_totals(n, 0.0);
      for (std::size_t d : data.train_days) {
        for (std::size_t t = 0; t < data.grid.intervals_per_day(); ++t) {
          for (std::size_t s = 0; s < n; ++s) {
            inflow_totals[s] += static_cast<double>(data.flows.inflow(d, t, s));
          }
        }
      }
      const std::vector<double>& w = cascnn->gate_vector().value.values();
      const Scaler inflow_scaler = Scaler::fit(inflow_totals);
      const Scaler w_scaler = Scaler::fit(w);
      std::vector<double> inflow_norm(n), w_norm(n);
      for (std::size_t s = 0; s < n; ++s) {
        inflow_norm[s] = inflow_scaler.apply(inflow_totals[s]);
        w_norm[s] = w_scaler.apply(w[s]);
        InterpretabilityRow row;
        row.station = s;
        row.inflow_total = inflow_totals[s];
        row.inflow_norm = inflow_norm[s];
        row.gate_weight = w[s];
        row.gate_weight_norm = w_norm[s];
        result.interpretability.rows.push_back(row);
      }
      result.interpretability.pearson_r = pearson(inflow_norm, w_norm);
    }
  }

  return result;
}

namespace {

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json doc{{"scope", report.scope},
                     {"cells", report.cells},
                     {"positive_cells", report.positive_cells},
                     {"target_sum", report.target_sum},
                     {"mse", report.mse},
                     {"rmse", report.rmse},
                     {"mae", report.mae},
                     {"mape", report.mape}};
  if (report.wmape_defined) {
    doc["wmape"] = report.wmape;
  } else {
    doc["wmape"] = nullptr;
  }
  return doc;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_metrics_json(const EvalResult& result, const std::string& model_label,
                        const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["model"] = model_label;
  doc["metrics"] = report_to_json(result.model_overall);
  doc["historical_average"] = report_to_json(result.ha_overall);
  doc["clipped_negative"] = result.clipped_negative;
  doc["skipped_samples"] = result.skipped_samples;
  if (result.interpretability.available) {
    if (result.interpretability.pearson_r) {
      doc["interpretability_pearson_r"] = *result.interpretability.pearson_r;
    } else {
      doc["interpretability_pearson_r"] = "n/a";
    }
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_per_interval_csv(const EvalResult& result, const TimeGrid& grid,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "interval,label,cells,rmse,mae,wmape\n";
  for (const IntervalMetrics& im : result.per_interval) {
    out << im.interval << ',' << grid.interval_label(im.interval) << ',' << im.report.cells << ','
        << fmt6(im.report.rmse) << ',' << fmt6(im.report.mae) << ','
        << (im.report.wmape_defined ? fmt6(im.report.wmape) : "n/a") << '\n';
  }
}

void write_pair_series_csv(const EvalResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "origin,destination,day,interval,actual,predicted\n";
  for (const OdPairSeries& series : result.pair_series) {
    for (const OdPairPoint& point : series.points) {
      out << series.origin << ',' << series.destination << ',' << point.day << ','
          << point.interval << ',' << fmt6(point.actual) << ',' << fmt6(point.predicted) << '\n';
    }
  }
}

void write_interpretability_csv(const InterpretabilityReport& report,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "station,inflow_total,inflow_norm,gate_weight,gate_weight_norm\n";
  for (const InterpretabilityRow& row : report.rows) {
    out << row.station << ',' << fmt6(row.inflow_total) << ',' << fmt6(row.inflow_norm) << ','
        << fmt6(row.gate_weight) << ',' << fmt6(row.gate_weight_norm) << '\n';
  }
}

ComparisonRow read_comparison_row(const std::filesystem::path& metrics_json) {
  std::ifstream in(metrics_json);
  if (!in) throw DataError("cannot open " + metrics_json.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad metrics file " + metrics_json.string() + ": " + e.what());
  }
  ComparisonRow row;
  row.model = doc.value("model", metrics_json.parent_path().filename().string());
  const auto& metrics = doc.at("metrics");
  row.rmse = metrics.at("rmse").get<double>();
  row.mae = metrics.at("mae").get<double>();
  if (!metrics.at("wmape").is_null()) {
    row.wmape = metrics.at("wmape").get<double>();
    row.wmape_defined = true;
  }
  return row;
}

void write_comparison_csv(std::span<const ComparisonRow> rows,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "model,rmse,mae,wmape\n";
  for (const ComparisonRow& row : rows) {
    out << row.model << ',' << fmt6(row.rmse) << ',' << fmt6(row.mae) << ','
        << (row.wmape_defined ? fmt6(row.wmape) : "n/a") << '\n';
  }
}

}  // namespace cascnn
