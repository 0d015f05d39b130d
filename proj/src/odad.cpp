#include "cascnn/odad.hpp"

#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace cascnn {

OdadTable compute_odad(const OdTensor& od, std::span<const std::size_t> day_subset) {
  if (day_subset.empty()) throw ConfigError("compute_odad: empty day subset");
  for (std::size_t d : day_subset) {
    if (d >= od.days()) {
      throw DataError("compute_odad: day " + std::to_string(d) + " outside tensor of " +
                      std::to_string(od.days()) + " days");
    }
  }

  OdadTable table;
  table.intervals = od.intervals();
  table.stations = od.stations();
  table.n_days = day_subset.size();
  table.a.assign(table.intervals * table.stations * table.stations, 0.0);
  const double inv = 1.0 / static_cast<double>(day_subset.size());
  for (std::size_t t = 0; t < table.intervals; ++t) {
    for (std::size_t i = 0; i < table.stations; ++i) {
      for (std::size_t j = 0; j < table.stations; ++j) {
        std::int64_t acc = 0;
        for (std::size_t d : day_subset) acc += od.at(d, t, i, j);
        table.at(t, i, j) = static_cast<double>(acc) * inv;
      }
    }
  }
  return table;
}

OdadLevel classify_level(double a) {
  if (a < 0.0) throw DomainError("ODAD value must be non-negative, got " + std::to_string(a));
  if (a == 0.0) return OdadLevel::kLowest;
  if (a <= 2.0) return OdadLevel::kLow;
  if (a <= 4.0) return OdadLevel::kMiddle;
  if (a <= 6.0) return OdadLevel::kHigh;
  return OdadLevel::kHighest;
}

const char* odad_level_name(OdadLevel level) {
  switch (level) {
    case OdadLevel::kLowest: return "Lowest";
    case OdadLevel::kLow: return "Low";
    case OdadLevel::kMiddle: return "Middle";
    case OdadLevel::kHigh: return "High";
    case OdadLevel::kHighest: return "Highest";
  }
  return "?";
}

Tensor MaskSet::interval_mask(std::size_t t) const {
  Tensor m = Tensor::zeros({stations, stations});
  for (std::size_t i = 0; i < stations; ++i) {
    for (std::size_t j = 0; j < stations; ++j) m.at(i, j) = at(t, i, j);
  }
  return m;
}

MaskSet build_masks(const OdadTable& table, double threshold) {
  MaskSet masks;
  masks.threshold = threshold;
  masks.intervals = table.intervals;
  masks.stations = table.stations;
  masks.mask.assign(table.a.size(), 0.0);
  masks.kept_count.assign(table.intervals, 0);
  for (std::size_t t = 0; t < table.intervals; ++t) {
    for (std::size_t i = 0; i < table.stations; ++i) {
      for (std::size_t j = 0; j < table.stations; ++j) {
        if (table.at(t, i, j) > threshold) {
          masks.mask[(t * table.stations + i) * table.stations + j] = 1.0;
          ++masks.kept_count[t];
        }
      }
    }
  }
  return masks;
}

SparsityReport sparsity_report(const OdTensor& od, const OdadTable& table,
                               std::span<const std::size_t> intervals) {
  std::vector<std::size_t> all;
  if (intervals.empty()) {
    all.resize(od.intervals());
    std::iota(all.begin(), all.end(), 0);
    intervals = all;
  }

  SparsityReport report;
  const std::size_t n = od.stations();
  for (std::size_t t : intervals) {
    if (t >= od.intervals()) {
      throw DataError("sparsity_report: interval " + std::to_string(t) + " out of range");
    }
    SparsityRow row;
    row.interval = t;
    std::size_t cells = 0;
    for (std::size_t d = 0; d < od.days(); ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::int64_t flow = od.at(d, t, i, j);
          ++cells;
          if (flow == 0) ++row.frac_zero;
          else if (flow <= 2) ++row.frac_le2;
          else if (flow <= 4) ++row.frac_le4;
          else if (flow <= 6) ++row.frac_le6;
          else ++row.frac_gt6;
        }
      }
    }
    if (cells > 0) {
      const double inv = 1.0 / static_cast<double>(cells);
      row.frac_zero *= inv;
      row.frac_le2 *= inv;
      row.frac_le4 *= inv;
      row.frac_le6 *= inv;
      row.frac_gt6 *= inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        switch (classify_level(table.at(t, i, j))) {
          case OdadLevel::kLowest: ++row.lowest; break;
          case OdadLevel::kLow: ++row.low; break;
          case OdadLevel::kMiddle: ++row.middle; break;
          case OdadLevel::kHigh: ++row.high; break;
          case OdadLevel::kHighest: ++row.highest; break;
        }
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::string fmt_frac(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_sparsity_csv(const SparsityReport& report, const TimeGrid& grid,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "interval,label,frac_zero,frac_le2,frac_le4,frac_le6,frac_gt6,"
         "lowest,low,middle,high,highest\n";
  for (const SparsityRow& row : report.rows) {
    out << row.interval << ',' << grid.interval_label(row.interval) << ','
        << fmt_frac(row.frac_zero) << ',' << fmt_frac(row.frac_le2) << ','
        << fmt_frac(row.frac_le4) << ',' << fmt_frac(row.frac_le6) << ','
        << fmt_frac(row.frac_gt6) << ',' << row.lowest << ',' << row.low << ',' << row.middle
        << ',' << row.high << ',' << row.highest << '\n';
  }
}

void write_sparsity_json(const SparsityReport& report, const TimeGrid& grid,
                         const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["intervals"] = nlohmann::json::array();
  for (const SparsityRow& row : report.rows) {
    doc["intervals"].push_back({{"interval", row.interval},
                                {"label", grid.interval_label(row.interval)},
                                {"frac_zero", row.frac_zero},
                                {"frac_le2", row.frac_le2},
                                {"frac_le4", row.frac_le4},
                                {"frac_le6", row.frac_le6},
                                {"frac_gt6", row.frac_gt6},
                                {"levels",
                                 {{"lowest", row.lowest},
                                  {"low", row.low},
                                  {"middle", row.middle},
                                  {"high", row.high},
                                  {"highest", row.highest}}}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_mask_files(const MaskSet& masks, const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << "interval,origin,destination,mask\n";
  for (std::size_t t = 0; t < masks.intervals; ++t) {
    for (std::size_t i = 0; i < masks.stations; ++i) {
      for (std::size_t j = 0; j < masks.stations; ++j) {
        if (masks.at(t, i, j) > 0.0) csv << t << ',' << i << ',' << j << ",1\n";
      }
    }
  }

  nlohmann::json header;
  header["n"] = masks.stations;
  header["intervals"] = masks.intervals;
  header["threshold"] = masks.threshold;
  header["kept_count"] = masks.kept_count;
  std::ofstream json_out(json_path);
  if (!json_out) throw DataError("cannot write " + json_path.string());
  json_out << header.dump(2) << '\n';
}

}  // namespace cascnn
