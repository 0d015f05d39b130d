#include "cascnn/afc.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>

namespace cascnn {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

bool parse_int_field(const std::string& field, int& out) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

// Fixed-width decimal field of a date/time literal.
bool parse_digits(const std::string& text, std::size_t pos, std::size_t len, int& out) {
  const char* begin = text.data() + pos;
  const char* end = begin + len;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

std::int64_t parse_date(const std::string& iso_date) {
  int y = 0, m = 0, d = 0;
  if (iso_date.size() != 10 || iso_date[4] != '-' || iso_date[7] != '-' ||
      !parse_digits(iso_date, 0, 4, y) || !parse_digits(iso_date, 5, 2, m) ||
      !parse_digits(iso_date, 8, 2, d)) {
    throw FormatError("bad date '" + iso_date + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw FormatError("bad date '" + iso_date + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::int64_t parse_datetime(const std::string& iso_datetime) {
  int h = 0, mi = 0, s = 0;
  if (iso_datetime.size() != 19 || iso_datetime[10] != 'T' || iso_datetime[13] != ':' ||
      iso_datetime[16] != ':' || !parse_digits(iso_datetime, 11, 2, h) ||
      !parse_digits(iso_datetime, 14, 2, mi) || !parse_digits(iso_datetime, 17, 2, s) || h > 23 ||
      mi > 59 || s > 59) {
    throw FormatError("bad datetime '" + iso_datetime + "', expected YYYY-MM-DDThh:mm:ss");
  }
  const std::int64_t day = parse_date(iso_datetime.substr(0, 10));
  return day * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_date(std::int64_t epoch_day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{epoch_day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_datetime(std::int64_t epoch_seconds) {
  const std::int64_t day = epoch_seconds / kSecondsPerDay;
  const std::int64_t tod = epoch_seconds - day * kSecondsPerDay;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "T%02d:%02d:%02d", static_cast<int>(tod / 3600),
                static_cast<int>((tod / 60) % 60), static_cast<int>(tod % 60));
  return format_date(day) + buf;
}

bool is_weekend(std::int64_t epoch_day) {
  const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{epoch_day}}};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

TimeGrid::TimeGrid(std::vector<std::string> dates, int service_start_min, int service_end_min,
                   int interval_minutes)
    : dates_(std::move(dates)),
      service_start_min_(service_start_min),
      service_end_min_(service_end_min),
      interval_minutes_(interval_minutes) {
  if (interval_minutes_ <= 0) throw ConfigError("interval length must be positive");
  if (service_end_min_ <= service_start_min_) {
    throw ConfigError("service end must come after service start");
  }
  if ((service_end_min_ - service_start_min_) % interval_minutes_ != 0) {
    throw ConfigError("service span of " + std::to_string(service_end_min_ - service_start_min_) +
                      " minutes is not divisible by the " + std::to_string(interval_minutes_) +
                      "-minute interval");
  }
  if (dates_.empty()) throw ConfigError("time grid needs at least one date");
  for (std::size_t d = 0; d < dates_.size(); ++d) {
    const std::int64_t epoch_day = parse_date(dates_[d]);
    if (!day_index_.emplace(epoch_day, d).second) {
      throw ConfigError("duplicate date " + dates_[d] + " in time grid");
    }
  }
}

std::size_t TimeGrid::intervals_per_day() const {
  return static_cast<std::size_t>((service_end_min_ - service_start_min_) / interval_minutes_);
}

std::optional<std::pair<std::size_t, std::size_t>> TimeGrid::locate(
    std::int64_t epoch_seconds) const {
  const std::int64_t day = epoch_seconds / kSecondsPerDay;
  const auto it = day_index_.find(day);
  if (it == day_index_.end()) return std::nullopt;
  const std::int64_t tod_min = (epoch_seconds - day * kSecondsPerDay) / 60;
  if (tod_min < service_start_min_ || tod_min >= service_end_min_) return std::nullopt;
  const std::size_t interval =
      static_cast<std::size_t>((tod_min - service_start_min_) / interval_minutes_);
  return std::make_pair(it->second, interval);
}

std::string TimeGrid::interval_label(std::size_t interval) const {
  const int start = service_start_min_ + static_cast<int>(interval) * interval_minutes_;
  const int end = start + interval_minutes_;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%02d:%02d-%02d:%02d", start / 60, start % 60, end / 60,
                end % 60);
  return buf;
}

OdTensor::OdTensor(std::size_t days, std::size_t intervals, std::size_t stations)
    : days_(days),
      intervals_(intervals),
      stations_(stations),
      counts_(days * intervals * stations * stations, 0) {}

std::int64_t& OdTensor::at(std::size_t d, std::size_t t, std::size_t i, std::size_t j) {
  return counts_[((d * intervals_ + t) * stations_ + i) * stations_ + j];
}

std::int64_t OdTensor::at(std::size_t d, std::size_t t, std::size_t i, std::size_t j) const {
  return counts_[((d * intervals_ + t) * stations_ + i) * stations_ + j];
}

std::int64_t OdTensor::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t OdTensor::row_sum(std::size_t d, std::size_t t, std::size_t i) const {
  std::int64_t acc = 0;
  for (std::size_t j = 0; j < stations_; ++j) acc += at(d, t, i, j);
  return acc;
}

std::int64_t OdTensor::col_sum(std::size_t d, std::size_t t, std::size_t j) const {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < stations_; ++i) acc += at(d, t, i, j);
  return acc;
}

Tensor OdTensor::matrix(std::size_t d, std::size_t t) const {
  Tensor m = Tensor::zeros({stations_, stations_});
  for (std::size_t i = 0; i < stations_; ++i) {
    for (std::size_t j = 0; j < stations_; ++j) {
      m.at(i, j) = static_cast<double>(at(d, t, i, j));
    }
  }
  return m;
}

FlowSeries::FlowSeries(std::size_t days, std::size_t intervals, std::size_t stations)
    : days_(days),
      intervals_(intervals),
      stations_(stations),
      inflow_(days * intervals * stations, 0),
      outflow_(days * intervals * stations, 0) {}

std::int64_t& FlowSeries::inflow(std::size_t d, std::size_t t, std::size_t s) {
  return inflow_[(d * intervals_ + t) * stations_ + s];
}
std::int64_t FlowSeries::inflow(std::size_t d, std::size_t t, std::size_t s) const {
  return inflow_[(d * intervals_ + t) * stations_ + s];
}
std::int64_t& FlowSeries::outflow(std::size_t d, std::size_t t, std::size_t s) {
  return outflow_[(d * intervals_ + t) * stations_ + s];
}
std::int64_t FlowSeries::outflow(std::size_t d, std::size_t t, std::size_t s) const {
  return outflow_[(d * intervals_ + t) * stations_ + s];
}
std::int64_t FlowSeries::total_inflow() const {
  return std::accumulate(inflow_.begin(), inflow_.end(), std::int64_t{0});
}
std::int64_t FlowSeries::total_outflow() const {
  return std::accumulate(outflow_.begin(), outflow_.end(), std::int64_t{0});
}

ParseResult parse_afc(std::istream& stream) {
  static const std::string kHeader = "card_id,entry_station,entry_time,exit_station,exit_time";
  ParseResult result;
  std::string line;
  if (!std::getline(stream, line)) throw FormatError("AFC stream is empty, header expected");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw FormatError("AFC header mismatch, expected '" + kHeader + "', got '" + line + "'");
  }

  std::size_t line_no = 1;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++result.stats.rows;

    std::array<std::string, 5> fields;
    std::size_t field_count = 0;
    std::size_t start = 0;
    bool overflow = false;
    for (std::size_t pos = 0; pos <= line.size(); ++pos) {
      if (pos == line.size() || line[pos] == ',') {
        if (field_count >= fields.size()) {
          overflow = true;
          break;
        }
        fields[field_count++] = line.substr(start, pos - start);
        start = pos + 1;
      }
    }

    bool ok = !overflow && field_count == 5 && !fields[0].empty();
    AfcRecord record;
    if (ok) {
      record.card_id = fields[0];
      ok = parse_int_field(fields[1], record.entry_station) &&
           parse_int_field(fields[3], record.exit_station) && record.entry_station >= 0 &&
           record.exit_station >= 0;
    }
    if (ok) {
      try {
        record.entry_time = parse_datetime(fields[2]);
        record.exit_time = parse_datetime(fields[4]);
      } catch (const FormatError&) {
        ok = false;
      }
    }
    if (ok && record.exit_time <= record.entry_time) ok = false;

    if (ok) {
      result.records.push_back(std::move(record));
    } else {
      ++result.stats.malformed;
      if (result.stats.malformed_lines.size() < 50) {
        result.stats.malformed_lines.push_back(line_no);
      }
    }
  }

  if (result.stats.rows > 0 &&
      100 * result.stats.malformed > result.stats.rows) {  // > 1% malformed
    std::string lines;
    for (std::size_t ln : result.stats.malformed_lines) {
      if (!lines.empty()) lines += ",";
      lines += std::to_string(ln);
    }
    throw DataError("AFC stream has " + std::to_string(result.stats.malformed) + " malformed of " +
                    std::to_string(result.stats.rows) + " rows (>1%), first lines: " + lines);
  }
  return result;
}

namespace {

void check_station(int station, std::size_t stations) {
  if (station < 0 || static_cast<std::size_t>(station) >= stations) {
    throw DataError("station id " + std::to_string(station) + " outside [0, " +
                    std::to_string(stations) + ")");
  }
}

}  // namespace

OdTensor extract_od(std::span<const AfcRecord> records, const TimeGrid& grid,
                    std::size_t stations, ExtractStats* stats) {
  OdTensor od(grid.days(), grid.intervals_per_day(), stations);
  for (const AfcRecord& record : records) {
    check_station(record.entry_station, stations);
    check_station(record.exit_station, stations);
    const auto slot = grid.locate(record.entry_time);
    if (!slot) {
      if (stats) ++stats->dropped_entry_out_of_grid;
      continue;
    }
    ++od.at(slot->first, slot->second, static_cast<std::size_t>(record.entry_station),
            static_cast<std::size_t>(record.exit_station));
  }
  return od;
}

FlowSeries extract_flows(std::span<const AfcRecord> records, const TimeGrid& grid,
                         std::size_t stations, ExtractStats* stats) {
  FlowSeries flows(grid.days(), grid.intervals_per_day(), stations);
  for (const AfcRecord& record : records) {
    check_station(record.entry_station, stations);
    check_station(record.exit_station, stations);
    const auto entry_slot = grid.locate(record.entry_time);
    if (!entry_slot) {
      if (stats) ++stats->dropped_entry_out_of_grid;
      continue;
    }
    ++flows.inflow(entry_slot->first, entry_slot->second,
                   static_cast<std::size_t>(record.entry_station));
    const auto exit_slot = grid.locate(record.exit_time);
    if (!exit_slot) {
      if (stats) ++stats->dropped_exit_out_of_grid;
      continue;
    }
    ++flows.outflow(exit_slot->first, exit_slot->second,
                    static_cast<std::size_t>(record.exit_station));
  }
  return flows;
}

Scaler Scaler::fit(std::span<const double> values) {
  if (values.empty()) throw ConfigError("Scaler::fit on empty values");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return Scaler{lo, hi};
}

Scaler Scaler::fit_counts(std::span<const std::int64_t> values) {
  if (values.empty()) throw ConfigError("Scaler::fit on empty values");
  std::int64_t lo = values[0], hi = values[0];
  for (std::int64_t v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return Scaler{static_cast<double>(lo), static_cast<double>(hi)};
}

std::vector<Sample> build_samples(const OdTensor& od, const FlowSeries& flows,
                                  const Scaler& od_scaler, const Scaler& flow_scaler,
                                  std::size_t history_days, std::size_t flow_steps,
                                  OutflowConvention convention) {
  if (history_days == 0) throw ConfigError("history window must cover at least one day");
  if (flow_steps == 0) throw ConfigError("flow window must cover at least one interval");
  if (od.days() != flows.days() || od.intervals() != flows.intervals() ||
      od.stations() != flows.stations()) {
    throw DimensionError("OD tensor and flow series disagree on dimensions");
  }
  if (od.days() < history_days + 1) {
    throw ConfigError("need at least " + std::to_string(history_days + 1) + " days, got " +
                      std::to_string(od.days()));
  }
  if (od.intervals() <= flow_steps) {
    throw ConfigError("need more than " + std::to_string(flow_steps) + " intervals per day, got " +
                      std::to_string(od.intervals()));
  }

  const std::size_t n = od.stations();
  std::vector<Sample> samples;
  samples.reserve((od.days() - history_days) * (od.intervals() - flow_steps));
  for (std::size_t d = history_days; d < od.days(); ++d) {
    for (std::size_t t = flow_steps; t < od.intervals(); ++t) {
      Sample sample;
      sample.day = d;
      sample.interval = t;

      sample.history = Tensor::zeros({history_days, n, n});
      for (std::size_t h = 0; h < history_days; ++h) {
        const std::size_t source_day = d - history_days + h;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            sample.history.at(h, i, j) =
                od_scaler.apply(static_cast<double>(od.at(source_day, t, i, j)));
          }
        }
      }

      sample.inflow_win = Tensor::zeros({flow_steps, n});
      sample.outflow_win = Tensor::zeros({flow_steps, n});
      for (std::size_t s = 0; s < flow_steps; ++s) {
        const std::size_t source_t = t - flow_steps + s;
        for (std::size_t station = 0; station < n; ++station) {
          sample.inflow_win.at(s, station) =
              flow_scaler.apply(static_cast<double>(flows.inflow(d, source_t, station)));
          const std::int64_t out = convention == OutflowConvention::kExitTime
                                       ? flows.outflow(d, source_t, station)
                                       : od.col_sum(d, source_t, station);
          sample.outflow_win.at(s, station) = flow_scaler.apply(static_cast<double>(out));
        }
      }

      sample.target = Tensor::zeros({n, n});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          sample.target.at(i, j) = od_scaler.apply(static_cast<double>(od.at(d, t, i, j)));
        }
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

std::size_t first_test_day(const TimeGrid& grid) {
  const std::size_t days = grid.days();
  if (days < 2) throw ConfigError("need at least two days to carve out a test range");
  const std::size_t test_days = std::max<std::size_t>(1, days / 5);
  return days - test_days;
}

SampleSplit split_train_val_test(std::vector<Sample> samples, const TimeGrid& grid,
                                 double val_rate, std::uint64_t seed) {
  SampleSplit split;
  split.first_test_day = first_test_day(grid);

  std::vector<Sample> pool;
  for (Sample& sample : samples) {
    if (sample.day >= split.first_test_day) {
      split.test.push_back(std::move(sample));
    } else {
      pool.push_back(std::move(sample));
    }
  }

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t val_count =
      static_cast<std::size_t>(static_cast<double>(pool.size()) * val_rate + 0.5);
  std::vector<bool> is_val(pool.size(), false);
  for (std::size_t i = 0; i < val_count && i < order.size(); ++i) is_val[order[i]] = true;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (is_val[i] ? split.val : split.train).push_back(std::move(pool[i]));
  }
  return split;
}

}  // namespace cascnn
