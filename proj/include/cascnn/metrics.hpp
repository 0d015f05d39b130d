#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cascnn/model.hpp"
#include "cascnn/pipeline.hpp"

namespace cascnn {

// Pooled error metrics over the unmasked cells of a scope, on the raw count
// scale. WMAPE is defined only while the scope holds positive targets.
struct MetricReport {
  std::string scope;
  std::size_t cells = 0;
  std::size_t positive_cells = 0;
  double target_sum = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double wmape = 0.0;
  bool wmape_defined = false;
  double mape = 0.0;  // mean |error| / target over positive cells
};

// Streaming accumulator for pooled metrics.
class MetricAccumulator {
 public:
  void add(double pred, double target, double mask);
  void add_matrix(const Tensor& pred, const Tensor& target, const Tensor& mask);
  void merge(const MetricAccumulator& other);
  std::size_t cells() const { return cells_; }

  // Throws EmptyScopeError when no cell was evaluated and NumericError if the
  // result violates RMSE >= MAE.
  MetricReport finalize(std::string scope) const;

 private:
  std::size_t cells_ = 0;
  std::size_t positive_cells_ = 0;
  double sq_sum_ = 0.0;
  double abs_sum_ = 0.0;
  double abs_sum_positive_ = 0.0;
  double ratio_sum_ = 0.0;
  double target_sum_ = 0.0;
};

// Training-day mean OD matrix per interval; the yardstick predictor.
class HistoricalAverage {
 public:
  explicit HistoricalAverage(OdadTable table) : table_(std::move(table)) {}
  // Raw-scale prediction for any day at the given interval.
  Tensor predict(std::size_t interval) const;
  const OdadTable& table() const { return table_; }

 private:
  OdadTable table_;
};

struct OdPairPoint {
  std::size_t day = 0;
  std::size_t interval = 0;
  double actual = 0.0;
  double predicted = 0.0;
};

struct OdPairSeries {
  std::size_t origin = 0;
  std::size_t destination = 0;
  std::vector<OdPairPoint> points;
  std::size_t masked_intervals = 0;
};

struct InterpretabilityRow {
  std::size_t station = 0;
  double inflow_total = 0.0;
  double inflow_norm = 0.0;
  double gate_weight = 0.0;
  double gate_weight_norm = 0.0;
};

struct InterpretabilityReport {
  bool available = false;  // false when the model has no gate vector
  std::vector<InterpretabilityRow> rows;
  std::optional<double> pearson_r;  // nullopt when a series has zero variance
};

struct IntervalMetrics {
  std::size_t interval = 0;
  MetricReport report;
};

struct EvalOptions {
  bool per_interval = false;
  bool interpret = false;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct EvalResult {
  MetricReport model_overall;
  MetricReport ha_overall;
  std::vector<IntervalMetrics> per_interval;
  std::vector<OdPairSeries> pair_series;
  InterpretabilityReport interpretability;
  std::size_t clipped_negative = 0;  // predictions clipped to zero after denormalization
  std::size_t skipped_samples = 0;   // degenerate-mask test samples
};

// Runs the model over the test split, denormalizes (clipping negatives to
// zero), and pools metrics; the historical average is scored alongside.
EvalResult evaluate(Model& model, const PreparedData& data, const EvalOptions& options = {});

// Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

void write_metrics_json(const EvalResult& result, const std::string& model_label,
                        const std::filesystem::path& path);
void write_per_interval_csv(const EvalResult& result, const TimeGrid& grid,
                            const std::filesystem::path& path);
void write_pair_series_csv(const EvalResult& result, const std::filesystem::path& path);
void write_interpretability_csv(const InterpretabilityReport& report,
                                const std::filesystem::path& path);

// Table-shaped comparison: one row per run, columns RMSE / MAE / WMAPE.
struct ComparisonRow {
  std::string model;
  double rmse = 0.0, mae = 0.0, wmape = 0.0;
  bool wmape_defined = false;
};
ComparisonRow read_comparison_row(const std::filesystem::path& metrics_json);
void write_comparison_csv(std::span<const ComparisonRow> rows,
                          const std::filesystem::path& path);

}  // namespace cascnn
