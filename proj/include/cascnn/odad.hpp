#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cascnn/afc.hpp"
#include "cascnn/tensor.hpp"

namespace cascnn {

// Per-interval multi-day average OD flow.
struct OdadTable {
  std::size_t intervals = 0;
  std::size_t stations = 0;
  std::size_t n_days = 0;
  std::vector<double> a;  // [interval][origin][destination]

  double at(std::size_t t, std::size_t i, std::size_t j) const {
    return a[(t * stations + i) * stations + j];
  }
  double& at(std::size_t t, std::size_t i, std::size_t j) {
    return a[(t * stations + i) * stations + j];
  }
};

// Arithmetic mean of the OD counts over the given days (the training days).
OdadTable compute_odad(const OdTensor& od, std::span<const std::size_t> day_subset);

enum class OdadLevel { kLowest, kLow, kMiddle, kHigh, kHighest };

// Level brackets: 0 -> Lowest, (0,2] -> Low, (2,4] -> Middle, (4,6] -> High,
// >6 -> Highest.
OdadLevel classify_level(double a);
const char* odad_level_name(OdadLevel level);

// Binary keep/mask decision per interval and OD pair: kept iff a > threshold.
struct MaskSet {
  double threshold = 2.0;
  std::size_t intervals = 0;
  std::size_t stations = 0;
  std::vector<double> mask;  // [interval][origin][destination], 0 or 1
  std::vector<std::size_t> kept_count;

  double at(std::size_t t, std::size_t i, std::size_t j) const {
    return mask[(t * stations + i) * stations + j];
  }
  // The interval-t mask as an n x n tensor.
  Tensor interval_mask(std::size_t t) const;
};

MaskSet build_masks(const OdadTable& table, double threshold = 2.0);

// Instantaneous-flow bucket fractions and ODAD level counts per interval.
struct SparsityRow {
  std::size_t interval = 0;
  // Buckets of instantaneous flow pooled over days: =0, (0,2], (2,4], (4,6], >6.
  double frac_zero = 0, frac_le2 = 0, frac_le4 = 0, frac_le6 = 0, frac_gt6 = 0;
  // Number of OD pairs per ODAD level at this interval.
  std::size_t lowest = 0, low = 0, middle = 0, high = 0, highest = 0;
};

struct SparsityReport {
  std::vector<SparsityRow> rows;
};

SparsityReport sparsity_report(const OdTensor& od, const OdadTable& table,
                               std::span<const std::size_t> intervals = {});

void write_sparsity_csv(const SparsityReport& report, const TimeGrid& grid,
                        const std::filesystem::path& path);
void write_sparsity_json(const SparsityReport& report, const TimeGrid& grid,
                         const std::filesystem::path& path);

// Mask artifact: CSV of kept cells plus a JSON header.
void write_mask_files(const MaskSet& masks, const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path);

}  // namespace cascnn
