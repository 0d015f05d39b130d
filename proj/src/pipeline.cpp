#include "cascnn/pipeline.hpp"

#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace cascnn {

DatasetManifest read_manifest(const std::filesystem::path& data_dir) {
  const auto path = data_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest manifest;
  if (!doc.contains("n") || !doc.contains("dates")) {
    throw FormatError("manifest " + path.string() + " must carry 'n' and 'dates'");
  }
  manifest.n = doc["n"].get<std::size_t>();
  manifest.dates = doc["dates"].get<std::vector<std::string>>();
  if (manifest.n < 2) throw DataError("manifest station count must be at least 2");
  if (manifest.dates.empty()) throw DataError("manifest date list is empty");
  return manifest;
}

PreparedData prepare_from_tensors(TimeGrid grid, OdTensor od, FlowSeries flows,
                                  const PipelineConfig& config) {
  PreparedData prepared;
  prepared.n = od.stations();
  prepared.grid = std::move(grid);
  prepared.od = std::move(od);
  prepared.flows = std::move(flows);

  prepared.first_test_day = first_test_day(prepared.grid);
  if (prepared.first_test_day <= config.history_days) {
    throw ConfigError("training range of " + std::to_string(prepared.first_test_day) +
                      " days cannot serve a history window of " +
                      std::to_string(config.history_days));
  }
  prepared.train_days.resize(prepared.first_test_day);
  std::iota(prepared.train_days.begin(), prepared.train_days.end(), 0);

  // Scalers see only the training-day range; the test days stay unseen.
  {
    const std::size_t n = prepared.n;
    const std::size_t intervals = prepared.grid.intervals_per_day();
    std::vector<std::int64_t> od_values;
    od_values.reserve(prepared.train_days.size() * intervals * n * n);
    std::vector<std::int64_t> flow_values;
    flow_values.reserve(prepared.train_days.size() * intervals * n * 2);
    for (std::size_t d : prepared.train_days) {
      for (std::size_t t = 0; t < intervals; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) od_values.push_back(prepared.od.at(d, t, i, j));
          flow_values.push_back(prepared.flows.inflow(d, t, i));
          flow_values.push_back(prepared.flows.outflow(d, t, i));
        }
      }
    }
    prepared.od_scaler = Scaler::fit_counts(od_values);
    prepared.flow_scaler = Scaler::fit_counts(flow_values);
  }

  prepared.odad = compute_odad(prepared.od, prepared.train_days);
  prepared.masks = build_masks(prepared.odad, config.mask_threshold);

  std::vector<Sample> samples =
      build_samples(prepared.od, prepared.flows, prepared.od_scaler, prepared.flow_scaler,
                    config.history_days, config.flow_steps, config.outflow_convention);

  std::vector<Tensor> interval_masks(prepared.grid.intervals_per_day());
  for (std::size_t t = 0; t < interval_masks.size(); ++t) {
    interval_masks[t] = prepared.masks.interval_mask(t);
  }
  for (Sample& sample : samples) sample.mask = interval_masks[sample.interval];

  prepared.split =
      split_train_val_test(std::move(samples), prepared.grid, config.val_rate, config.split_seed);
  return prepared;
}

PreparedData prepare_dataset(const std::filesystem::path& data_dir, const PipelineConfig& config) {
  const DatasetManifest manifest = read_manifest(data_dir);
  TimeGrid grid(manifest.dates, config.service_start_min, config.service_end_min,
                config.interval_minutes);

  const auto csv_path = data_dir / "afc.csv";
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open " + csv_path.string());
  ParseResult parsed = parse_afc(in);

  ExtractStats od_stats, flow_stats;
  OdTensor od = extract_od(parsed.records, grid, manifest.n, &od_stats);
  FlowSeries flows = extract_flows(parsed.records, grid, manifest.n, &flow_stats);

  PreparedData prepared = prepare_from_tensors(std::move(grid), std::move(od), std::move(flows),
                                               config);
  prepared.parse_stats = std::move(parsed.stats);
  // extract_flows re-counts the entry-side drops; keep one copy of each kind.
  prepared.extract_stats.dropped_entry_out_of_grid = od_stats.dropped_entry_out_of_grid;
  prepared.extract_stats.dropped_exit_out_of_grid = flow_stats.dropped_exit_out_of_grid;
  return prepared;
}

}  // namespace cascnn
