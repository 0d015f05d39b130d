#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascnn/errors.hpp"
#include "cascnn/tensor.hpp"

namespace cascnn {

// One completed trip from the fare-collection log. Times are epoch seconds.
struct AfcRecord {
  std::string card_id;
  int entry_station = 0;
  std::int64_t entry_time = 0;
  int exit_station = 0;
  std::int64_t exit_time = 0;
};

// "YYYY-MM-DD" -> days since 1970-01-01. Throws FormatError on bad input.
std::int64_t parse_date(const std::string& iso_date);
// "YYYY-MM-DDThh:mm:ss" -> epoch seconds.
std::int64_t parse_datetime(const std::string& iso_datetime);
std::string format_date(std::int64_t epoch_day);
std::string format_datetime(std::int64_t epoch_seconds);
bool is_weekend(std::int64_t epoch_day);

// The service-day discretization: which dates exist and how each day is cut
// into intervals. Out-of-hours instants have no bin.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(std::vector<std::string> dates, int service_start_min = 5 * 60,
           int service_end_min = 23 * 60, int interval_minutes = 30);

  std::size_t days() const { return dates_.size(); }
  std::size_t intervals_per_day() const;
  const std::vector<std::string>& dates() const { return dates_; }
  int service_start_min() const { return service_start_min_; }
  int service_end_min() const { return service_end_min_; }
  int interval_minutes() const { return interval_minutes_; }

  // (day index, interval index) of an epoch-second instant, or nullopt when
  // the instant falls outside the grid.
  std::optional<std::pair<std::size_t, std::size_t>> locate(std::int64_t epoch_seconds) const;

  // Human-readable "hh:mm-hh:mm" label of an interval.
  std::string interval_label(std::size_t interval) const;

 private:
  std::vector<std::string> dates_;
  std::unordered_map<std::int64_t, std::size_t> day_index_;
  int service_start_min_ = 5 * 60;
  int service_end_min_ = 23 * 60;
  int interval_minutes_ = 30;
};

// Trip counts indexed [day][interval][origin][destination], binned by the
// entry interval of each trip.
class OdTensor {
 public:
  OdTensor() = default;
  OdTensor(std::size_t days, std::size_t intervals, std::size_t stations);

  std::int64_t& at(std::size_t d, std::size_t t, std::size_t i, std::size_t j);
  std::int64_t at(std::size_t d, std::size_t t, std::size_t i, std::size_t j) const;
  std::size_t days() const { return days_; }
  std::size_t intervals() const { return intervals_; }
  std::size_t stations() const { return stations_; }
  std::int64_t total() const;
  std::int64_t row_sum(std::size_t d, std::size_t t, std::size_t i) const;
  std::int64_t col_sum(std::size_t d, std::size_t t, std::size_t j) const;
  const std::vector<std::int64_t>& counts() const { return counts_; }

  // The day-d, interval-t matrix as an n x n tensor of doubles.
  Tensor matrix(std::size_t d, std::size_t t) const;

 private:
  std::size_t days_ = 0, intervals_ = 0, stations_ = 0;
  std::vector<std::int64_t> counts_;
};

// Per-station inflow (binned by entry time at the entry station) and outflow
// (binned by exit time at the exit station), both [day][interval][station].
class FlowSeries {
 public:
  FlowSeries() = default;
  FlowSeries(std::size_t days, std::size_t intervals, std::size_t stations);

  std::int64_t& inflow(std::size_t d, std::size_t t, std::size_t s);
  std::int64_t inflow(std::size_t d, std::size_t t, std::size_t s) const;
  std::int64_t& outflow(std::size_t d, std::size_t t, std::size_t s);
  std::int64_t outflow(std::size_t d, std::size_t t, std::size_t s) const;
  std::size_t days() const { return days_; }
  std::size_t intervals() const { return intervals_; }
  std::size_t stations() const { return stations_; }
  std::int64_t total_inflow() const;
  std::int64_t total_outflow() const;

 private:
  std::size_t days_ = 0, intervals_ = 0, stations_ = 0;
  std::vector<std::int64_t> inflow_;
  std::vector<std::int64_t> outflow_;
};

struct ParseStats {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based, header is line 1
};

struct ParseResult {
  std::vector<AfcRecord> records;
  ParseStats stats;
};

// Parse the AFC CSV (header `card_id,entry_station,entry_time,exit_station,exit_time`).
// Malformed rows are counted; more than 1% malformed is a hard DataError.
ParseResult parse_afc(std::istream& stream);

struct ExtractStats {
  std::size_t dropped_entry_out_of_grid = 0;  // trips never binned
  std::size_t dropped_exit_out_of_grid = 0;   // trips missing from outflow only
};

OdTensor extract_od(std::span<const AfcRecord> records, const TimeGrid& grid,
                    std::size_t stations, ExtractStats* stats = nullptr);
FlowSeries extract_flows(std::span<const AfcRecord> records, const TimeGrid& grid,
                         std::size_t stations, ExtractStats* stats = nullptr);

// Min-max normalization fitted on the training portion.
struct Scaler {
  double min = 0.0;
  double max = 0.0;

  static Scaler fit(std::span<const double> values);
  static Scaler fit_counts(std::span<const std::int64_t> values);
  double apply(double x) const { return max > min ? (x - min) / (max - min) : 0.0; }
  double invert(double u) const { return u * (max - min) + min; }
};

// One supervised example: x history matrices of the target interval on prior
// days, y inflow/outflow steps of the target day, and the target matrix.
// All inputs are normalized; `mask` is attached by the pipeline.
struct Sample {
  std::size_t day = 0;
  std::size_t interval = 0;
  Tensor history;      // x  x n x n
  Tensor inflow_win;   // y  x n
  Tensor outflow_win;  // y  x n
  Tensor target;       // n x n, normalized
  Tensor mask;         // n x n of {0,1}
};

enum class OutflowConvention {
  kExitTime,   // the observable series: exits binned by exit time
  kColumnSum,  // OD column sums, entry-binned
};

// One sample per (d, t) with d >= x and t >= y; histories take the same
// interval on the x previous days, flow windows the y previous intervals of
// the same day.
std::vector<Sample> build_samples(const OdTensor& od, const FlowSeries& flows,
                                  const Scaler& od_scaler, const Scaler& flow_scaler,
                                  std::size_t history_days, std::size_t flow_steps,
                                  OutflowConvention convention = OutflowConvention::kExitTime);

struct SampleSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::size_t first_test_day = 0;
};

// Samples of the last fifth of days become the test set; the rest are split
// train/val by seeded uniform selection.
SampleSplit split_train_val_test(std::vector<Sample> samples, const TimeGrid& grid,
                                 double val_rate = 0.1, std::uint64_t seed = 0);

// Day range [0, first_test_day) used for scaler and ODAD fitting.
std::size_t first_test_day(const TimeGrid& grid);

}  // namespace cascnn
