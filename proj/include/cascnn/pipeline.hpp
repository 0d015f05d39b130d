#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cascnn/afc.hpp"
#include "cascnn/odad.hpp"

namespace cascnn {

// Everything between the raw CSV and the model-ready samples.
struct PipelineConfig {
  int service_start_min = 5 * 60;
  int service_end_min = 23 * 60;
  int interval_minutes = 30;
  std::size_t history_days = 5;  // x
  std::size_t flow_steps = 5;    // y
  double mask_threshold = 2.0;   // -1 keeps every cell
  double val_rate = 0.1;
  OutflowConvention outflow_convention = OutflowConvention::kExitTime;
  std::uint64_t split_seed = 0;
};

struct PreparedData {
  TimeGrid grid;
  std::size_t n = 0;
  OdTensor od;
  FlowSeries flows;
  ParseStats parse_stats;
  ExtractStats extract_stats;
  std::size_t first_test_day = 0;
  std::vector<std::size_t> train_days;  // [0, first_test_day)
  Scaler od_scaler;
  Scaler flow_scaler;
  OdadTable odad;
  MaskSet masks;
  SampleSplit split;  // samples carry their interval masks

  // Raw (count-scale) target matrix of a sample.
  Tensor raw_target(const Sample& sample) const { return od.matrix(sample.day, sample.interval); }
};

// Dataset directory layout: `afc.csv` plus `manifest.json` with the station
// count and the ordered service dates.
struct DatasetManifest {
  std::size_t n = 0;
  std::vector<std::string> dates;
};

DatasetManifest read_manifest(const std::filesystem::path& data_dir);

// Full preparation: parse, extract, fit scalers and ODAD on the training days,
// build masks and samples, split.
PreparedData prepare_dataset(const std::filesystem::path& data_dir, const PipelineConfig& config);

// The same preparation on already extracted tensors (used by tests).
PreparedData prepare_from_tensors(TimeGrid grid, OdTensor od, FlowSeries flows,
                                  const PipelineConfig& config);

}  // namespace cascnn
