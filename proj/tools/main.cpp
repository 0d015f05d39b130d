// cascnn: synthetic-data generation, ingestion, training, and evaluation for
// short-term metro origin-destination demand prediction.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "cascnn/checkpoint.hpp"
#include "cascnn/metrics.hpp"
#include "cascnn/pipeline.hpp"
#include "cascnn/synth.hpp"
#include "cascnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles

struct GridOptions {
  std::string service_start = "05:00";
  std::string service_end = "23:00";
  int interval_minutes = 30;
};

struct PipelineOptions {
  std::size_t history_days = 5;
  std::size_t flow_steps = 5;
  double mask_threshold = 2.0;
  double val_rate = 0.1;
  std::string outflow_convention = "exit_time";
};

struct ModelOptions {
  std::string model = "cascnn";
  std::vector<std::size_t> kernels = {3, 5};
  std::size_t filters1 = 16;
  std::size_t filters2 = 1;
  std::size_t reduction = 2;
  std::vector<std::string> ablations;
  bool ca_after_layer2 = false;
  std::string label;
};

struct TrainOptions {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::string optimizer = "adam";
};

int parse_hhmm(const std::string& text) {
  int h = 0, m = 0;
  if (std::sscanf(text.c_str(), "%d:%d", &h, &m) != 2 || h < 0 || h > 24 || m < 0 || m > 59) {
    throw cascnn::ConfigError("bad time of day '" + text + "', expected HH:MM");
  }
  return h * 60 + m;
}

// Collects every invalid setting before failing.
void validate_options(const GridOptions& grid, const PipelineOptions& pipeline,
                      const ModelOptions& model, const TrainOptions& train) {
  std::vector<std::string> problems;
  try {
    if (parse_hhmm(grid.service_end) <= parse_hhmm(grid.service_start)) {
      problems.push_back("service-end must come after service-start");
    }
  } catch (const cascnn::ConfigError& e) {
    problems.push_back(e.what());
  }
  if (grid.interval_minutes <= 0) problems.push_back("interval-min must be positive");
  if (pipeline.history_days == 0) problems.push_back("x must be at least 1");
  if (pipeline.flow_steps == 0) problems.push_back("y must be at least 1");
  if (pipeline.val_rate < 0.0 || pipeline.val_rate >= 1.0) {
    problems.push_back("val-rate must lie in [0, 1)");
  }
  if (pipeline.outflow_convention != "exit_time" && pipeline.outflow_convention != "column_sum") {
    problems.push_back("outflow-convention must be exit_time or column_sum");
  }
  if (model.model != "cascnn" && model.model != "cnn2d") {
    problems.push_back("model must be cascnn or cnn2d");
  }
  for (std::size_t k : model.kernels) {
    if (k % 2 == 0) problems.push_back("kernel size " + std::to_string(k) + " is even");
  }
  if (model.filters1 == 0 || model.filters2 == 0) problems.push_back("filters must be >= 1");
  if (model.reduction == 0) problems.push_back("reduction must be >= 1");
  for (const std::string& ablation : model.ablations) {
    if (ablation != "no_split" && ablation != "no_mask" && ablation != "no_ca" &&
        ablation != "no_inflow" && ablation != "no_outflow") {
      problems.push_back("unknown ablation '" + ablation + "'");
    }
  }
  if (train.lr < 0.0) problems.push_back("lr must be non-negative");
  if (train.batch_size == 0) problems.push_back("batch must be >= 1");
  if (train.patience == 0) problems.push_back("patience must be >= 1");
  if (train.optimizer != "adam" && train.optimizer != "sgd") {
    problems.push_back("optimizer must be adam or sgd");
  }
  if (!problems.empty()) {
    std::string joined = "invalid configuration:";
    for (const std::string& p : problems) joined += "\n  - " + p;
    throw cascnn::ConfigError(joined);
  }
}

bool has_ablation(const ModelOptions& model, const std::string& name) {
  return std::find(model.ablations.begin(), model.ablations.end(), name) !=
         model.ablations.end();
}

cascnn::PipelineConfig to_pipeline_config(const GridOptions& grid,
                                          const PipelineOptions& pipeline, std::uint64_t seed) {
  cascnn::PipelineConfig config;
  config.service_start_min = parse_hhmm(grid.service_start);
  config.service_end_min = parse_hhmm(grid.service_end);
  config.interval_minutes = grid.interval_minutes;
  config.history_days = pipeline.history_days;
  config.flow_steps = pipeline.flow_steps;
  config.mask_threshold = pipeline.mask_threshold;
  config.val_rate = pipeline.val_rate;
  config.outflow_convention = pipeline.outflow_convention == "column_sum"
                                  ? cascnn::OutflowConvention::kColumnSum
                                  : cascnn::OutflowConvention::kExitTime;
  config.split_seed = seed;
  return config;
}

cascnn::ModelConfig to_model_config(const ModelOptions& model, const PipelineOptions& pipeline,
                                    std::size_t n) {
  cascnn::ModelConfig config;
  config.n = n;
  config.history_days = pipeline.history_days;
  config.flow_steps = pipeline.flow_steps;
  config.kernels = model.kernels;
  config.filters_layer1 = model.filters1;
  config.filters_layer2 = model.filters2;
  config.reduction = model.reduction;
  config.no_split = has_ablation(model, "no_split");
  config.no_channel_attention = has_ablation(model, "no_ca");
  config.no_inflow = has_ablation(model, "no_inflow");
  config.no_outflow = has_ablation(model, "no_outflow");
  config.ca_after_layer2 = model.ca_after_layer2;
  return config;
}

std::string default_label(const ModelOptions& model) {
  if (!model.label.empty()) return model.label;
  if (model.model == "cnn2d") return "cnn2d";
  std::string label = "cascnn";
  if (has_ablation(model, "no_split")) label += "-no-scnn";
  if (has_ablation(model, "no_mask")) label += "-no-mask";
  if (has_ablation(model, "no_ca")) label += "-no-ca";
  if (has_ablation(model, "no_inflow")) label += "-no-inflow";
  if (has_ablation(model, "no_outflow")) label += "-no-outflow";
  return label;
}

fs::path resolve_out_dir(std::string out, const std::string& command) {
  if (out.empty()) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t stamp = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::gmtime(&stamp));
    out = "runs/" + command + "-" + buf;
  }
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void add_grid_options(CLI::App* cmd, GridOptions& grid) {
  cmd->add_option("--service-start", grid.service_start,
                  "Service day start, HH:MM")->capture_default_str();
  cmd->add_option("--service-end", grid.service_end,
                  "Service day end, HH:MM")->capture_default_str();
  cmd->add_option("--interval-min", grid.interval_minutes,
                  "Interval length in minutes")->capture_default_str();
}

void add_pipeline_options(CLI::App* cmd, PipelineOptions& pipeline) {
  cmd->add_option("--x", pipeline.history_days,
                  "History window: same interval on the previous x days")->capture_default_str();
  cmd->add_option("--y", pipeline.flow_steps,
                  "Flow window: previous y intervals of the same day")->capture_default_str();
  cmd->add_option("--threshold", pipeline.mask_threshold,
                  "Attraction-degree mask threshold; -1 keeps every cell")->capture_default_str();
  cmd->add_option("--val-rate", pipeline.val_rate,
                  "Fraction of non-test samples used for validation")->capture_default_str();
  cmd->add_option("--outflow-convention", pipeline.outflow_convention,
                  "Outflow series fed to the gate: exit_time or column_sum")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// Run artifacts

json config_echo(const std::string& label, const std::string& data_dir, std::uint64_t seed,
                 const GridOptions& grid, const PipelineOptions& pipeline,
                 const ModelOptions& model, const TrainOptions& train) {
  json doc;
  doc["label"] = label;
  doc["data_dir"] = data_dir;
  doc["seed"] = seed;
  doc["grid"] = {{"service_start", grid.service_start},
                 {"service_end", grid.service_end},
                 {"interval_minutes", grid.interval_minutes}};
  doc["pipeline"] = {{"x", pipeline.history_days},
                     {"y", pipeline.flow_steps},
                     {"threshold", pipeline.mask_threshold},
                     {"val_rate", pipeline.val_rate},
                     {"outflow_convention", pipeline.outflow_convention}};
  doc["model"] = {{"kind", model.model},
                  {"kernels", model.kernels},
                  {"filters1", model.filters1},
                  {"filters2", model.filters2},
                  {"reduction", model.reduction},
                  {"ablations", model.ablations},
                  {"ca_after_layer2", model.ca_after_layer2}};
  doc["train"] = {{"lr", train.lr},
                  {"batch", train.batch_size},
                  {"max_epochs", train.max_epochs},
                  {"patience", train.patience},
                  {"optimizer", train.optimizer},
                  {"loss", has_ablation(model, "no_mask") ? "plain_mse" : "masked_mse"}};
  return doc;
}

void write_pipeline_json(const fs::path& dir, const json& echo,
                         const cascnn::PreparedData& data) {
  json doc = echo;
  doc["format"] = "cascnn-run-v1";
  doc["scalers"] = {{"od", {{"min", data.od_scaler.min}, {"max", data.od_scaler.max}}},
                    {"flow", {{"min", data.flow_scaler.min}, {"max", data.flow_scaler.max}}}};
  std::ofstream out(dir / "pipeline.json");
  out << doc.dump(2) << '\n';
}

struct RunContext {
  std::string label;
  GridOptions grid;
  PipelineOptions pipeline;
  ModelOptions model;
  TrainOptions train;
  std::uint64_t seed = 0;
};

// Reads back what `train` wrote, so eval/predict reproduce the exact pipeline.
RunContext load_run_context(const fs::path& run_dir) {
  std::ifstream in(run_dir / "pipeline.json");
  if (!in) throw cascnn::DataError("cannot open " + (run_dir / "pipeline.json").string());
  json doc;
  in >> doc;
  if (doc.value("format", "") != "cascnn-run-v1") {
    throw cascnn::FormatError("unknown run format in " + run_dir.string());
  }
  RunContext context;
  context.label = doc.at("label").get<std::string>();
  context.seed = doc.at("seed").get<std::uint64_t>();
  context.grid.service_start = doc.at("grid").at("service_start").get<std::string>();
  context.grid.service_end = doc.at("grid").at("service_end").get<std::string>();
  context.grid.interval_minutes = doc.at("grid").at("interval_minutes").get<int>();
  context.pipeline.history_days = doc.at("pipeline").at("x").get<std::size_t>();
  context.pipeline.flow_steps = doc.at("pipeline").at("y").get<std::size_t>();
  context.pipeline.mask_threshold = doc.at("pipeline").at("threshold").get<double>();
  context.pipeline.val_rate = doc.at("pipeline").at("val_rate").get<double>();
  context.pipeline.outflow_convention =
      doc.at("pipeline").at("outflow_convention").get<std::string>();
  context.model.model = doc.at("model").at("kind").get<std::string>();
  context.model.ablations = doc.at("model").at("ablations").get<std::vector<std::string>>();
  return context;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int run_synth(const cascnn::SynthConfig& config, const std::string& out) {
  const fs::path dir = resolve_out_dir(out, "synth");
  cascnn::generate(config, dir);
  std::cout << "synth: seed " << config.seed << ", " << config.n_days << " weekdays, n="
            << config.network.n << "\n";
  std::cout << "synth: wrote " << (dir / "afc.csv").string() << " and manifest.json\n";
  return 0;
}

int run_ingest(const std::string& data, const std::string& out, const GridOptions& grid,
               const PipelineOptions& pipeline, std::uint64_t seed) {
  const fs::path dir = resolve_out_dir(out, "ingest");
  const cascnn::PreparedData prepared =
      cascnn::prepare_dataset(data, to_pipeline_config(grid, pipeline, seed));

  json report;
  report["data_dir"] = data;
  report["n"] = prepared.n;
  report["days"] = prepared.grid.days();
  report["intervals_per_day"] = prepared.grid.intervals_per_day();
  report["rows"] = prepared.parse_stats.rows;
  report["malformed_rows"] = prepared.parse_stats.malformed;
  report["dropped_entry_out_of_grid"] = prepared.extract_stats.dropped_entry_out_of_grid;
  report["dropped_exit_out_of_grid"] = prepared.extract_stats.dropped_exit_out_of_grid;
  report["total_trips"] = prepared.od.total();
  report["total_inflow"] = prepared.flows.total_inflow();
  report["total_outflow"] = prepared.flows.total_outflow();
  report["first_test_day"] = prepared.first_test_day;
  report["samples"] = {{"train", prepared.split.train.size()},
                       {"val", prepared.split.val.size()},
                       {"test", prepared.split.test.size()}};
  std::ofstream out_json(dir / "ingest_report.json");
  out_json << report.dump(2) << '\n';

  std::cout << "ingest: " << prepared.parse_stats.rows << " rows, " << prepared.od.total()
            << " trips binned, report at " << (dir / "ingest_report.json").string() << "\n";
  return 0;
}

int run_stats(const std::string& data, const std::string& out,
              const std::vector<std::size_t>& intervals, const GridOptions& grid,
              const PipelineOptions& pipeline, std::uint64_t seed) {
  const fs::path dir = resolve_out_dir(out, "stats");
  const cascnn::PreparedData prepared =
      cascnn::prepare_dataset(data, to_pipeline_config(grid, pipeline, seed));
  const cascnn::SparsityReport report =
      cascnn::sparsity_report(prepared.od, prepared.odad, intervals);
  cascnn::write_sparsity_csv(report, prepared.grid, dir / "sparsity.csv");
  cascnn::write_sparsity_json(report, prepared.grid, dir / "sparsity.json");
  std::cout << "stats: wrote " << (dir / "sparsity.csv").string() << " and sparsity.json\n";
  return 0;
}

int run_train(const std::string& data, const std::string& out, std::uint64_t seed,
              const GridOptions& grid, const PipelineOptions& pipeline,
              const ModelOptions& model_options, const TrainOptions& train_options) {
  validate_options(grid, pipeline, model_options, train_options);
  const fs::path dir = resolve_out_dir(out, "train");
  const std::string label = default_label(model_options);

  std::cout << "train: data=" << data << " out=" << dir.string() << " seed=" << seed
            << " model=" << label << "\n";

  cascnn::PreparedData prepared =
      cascnn::prepare_dataset(data, to_pipeline_config(grid, pipeline, seed));
  const cascnn::ModelConfig model_config =
      to_model_config(model_options, pipeline, prepared.n);
  std::unique_ptr<cascnn::Model> model =
      cascnn::build_model(model_options.model, model_config, seed);

  cascnn::TrainConfig train_config;
  train_config.lr = train_options.lr;
  train_config.batch_size = train_options.batch_size;
  train_config.max_epochs = train_options.max_epochs;
  train_config.patience = train_options.patience;
  train_config.seed = seed;
  train_config.masked_loss = !has_ablation(model_options, "no_mask");
  train_config.optimizer = train_options.optimizer == "sgd"
                               ? cascnn::TrainConfig::Optimizer::kSgd
                               : cascnn::TrainConfig::Optimizer::kAdam;

  const cascnn::TrainState state =
      cascnn::fit(*model, prepared.split.train, prepared.split.val, train_config);

  cascnn::save_checkpoint(*model, dir / "checkpoint.json", dir / "checkpoint.f64");
  cascnn::write_mask_files(prepared.masks, dir / "mask.csv", dir / "mask.json");
  const json echo =
      config_echo(label, data, seed, grid, pipeline, model_options, train_options);
  write_pipeline_json(dir, echo, prepared);

  {
    std::ofstream history(dir / "loss_history.csv");
    history << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < state.history.size(); ++e) {
      history << (e + 1) << ',' << fmt17(state.history[e].train_loss) << ','
              << fmt17(state.history[e].val_loss) << '\n';
    }
  }
  {
    json report;
    report["config"] = echo;
    report["label"] = label;
    report["seed"] = seed;
    report["data_dir"] = data;
    report["epochs_run"] = state.history.size();
    report["best_epoch"] = state.best_epoch;
    report["best_val_loss"] = state.best_val_loss;
    report["stop_reason"] = state.stop_reason;
    report["skipped_train_samples"] = state.skipped_train_samples;
    report["skipped_val_samples"] = state.skipped_val_samples;
    report["wall_seconds"] = state.wall_seconds;
    report["train_samples"] = prepared.split.train.size();
    report["val_samples"] = prepared.split.val.size();
    report["test_samples"] = prepared.split.test.size();
    json history = json::array();
    for (std::size_t e = 0; e < state.history.size(); ++e) {
      history.push_back({{"epoch", e + 1},
                         {"train_loss", state.history[e].train_loss},
                         {"val_loss", state.history[e].val_loss}});
    }
    report["history"] = std::move(history);
    std::ofstream out_json(dir / "run_report.json");
    out_json << report.dump(2) << '\n';
  }

  std::cout << "train: stopped after " << state.history.size() << " epochs (" << state.stop_reason
            << "), best val loss " << state.best_val_loss << " at epoch " << state.best_epoch
            << "\n";
  std::cout << "train: checkpoint and reports under " << dir.string() << "\n";
  return 0;
}

int run_eval(const std::string& run, const std::string& data, const std::string& out,
             bool per_interval, bool interpret, const std::vector<std::string>& pair_specs) {
  const fs::path run_dir(run);
  const RunContext context = load_run_context(run_dir);
  const fs::path dir = resolve_out_dir(out, "eval");
  std::cout << "eval: run=" << run << " data=" << data << " out=" << dir.string() << " seed="
            << context.seed << "\n";

  cascnn::EvalOptions options;
  options.per_interval = per_interval;
  options.interpret = interpret;
  for (const std::string& spec : pair_specs) {
    std::size_t origin = 0, destination = 0;
    if (std::sscanf(spec.c_str(), "%zu:%zu", &origin, &destination) != 2) {
      throw cascnn::ConfigError("bad OD pair '" + spec + "', expected ORIGIN:DESTINATION");
    }
    options.pairs.emplace_back(origin, destination);
  }

  cascnn::PreparedData prepared = cascnn::prepare_dataset(
      data, to_pipeline_config(context.grid, context.pipeline, context.seed));
  std::unique_ptr<cascnn::Model> model = cascnn::load_checkpoint(run_dir / "checkpoint.json");

  const cascnn::EvalResult result = cascnn::evaluate(*model, prepared, options);

  cascnn::write_metrics_json(result, context.label, dir / "metrics.json");
  if (per_interval) cascnn::write_per_interval_csv(result, prepared.grid, dir / "per_interval.csv");
  if (!result.pair_series.empty()) cascnn::write_pair_series_csv(result, dir / "pairs.csv");
  if (interpret) {
    cascnn::write_interpretability_csv(result.interpretability, dir / "interpret.csv");
    json doc;
    doc["available"] = result.interpretability.available;
    if (result.interpretability.available && result.interpretability.pearson_r) {
      doc["pearson_r"] = *result.interpretability.pearson_r;
    } else {
      doc["pearson_r"] = "n/a";
    }
    std::ofstream out_json(dir / "interpret.json");
    out_json << doc.dump(2) << '\n';
  }

  std::cout << "eval: model " << context.label << " rmse=" << result.model_overall.rmse
            << " mae=" << result.model_overall.mae;
  if (result.model_overall.wmape_defined) {
    std::cout << " wmape=" << result.model_overall.wmape;
  }
  std::cout << " | historical-average rmse=" << result.ha_overall.rmse << "\n";
  std::cout << "eval: reports under " << dir.string() << "\n";
  return 0;
}

int run_predict(const std::string& run, const std::string& data, const std::string& out,
                long day, long interval) {
  const fs::path run_dir(run);
  const RunContext context = load_run_context(run_dir);
  const fs::path dir = resolve_out_dir(out, "predict");
  std::cout << "predict: run=" << run << " data=" << data << " out=" << dir.string() << " seed="
            << context.seed << "\n";

  cascnn::PreparedData prepared = cascnn::prepare_dataset(
      data, to_pipeline_config(context.grid, context.pipeline, context.seed));
  std::unique_ptr<cascnn::Model> model = cascnn::load_checkpoint(run_dir / "checkpoint.json");

  std::ofstream csv(dir / "predictions.csv");
  csv << "day,date,interval,origin,destination,actual,predicted,mask\n";
  std::size_t written = 0;
  for (const cascnn::Sample& sample : prepared.split.test) {
    if (day >= 0 && sample.day != static_cast<std::size_t>(day)) continue;
    if (interval >= 0 && sample.interval != static_cast<std::size_t>(interval)) continue;
    cascnn::Tensor pred =
        model->forward(sample.history, sample.inflow_win, sample.outflow_win);
    const cascnn::Tensor actual = prepared.raw_target(sample);
    for (std::size_t i = 0; i < prepared.n; ++i) {
      for (std::size_t j = 0; j < prepared.n; ++j) {
        const double raw = std::max(0.0, prepared.od_scaler.invert(pred.at(i, j)));
        csv << sample.day << ',' << prepared.grid.dates()[sample.day] << ',' << sample.interval
            << ',' << i << ',' << j << ',' << actual.at(i, j) << ',' << fmt17(raw) << ','
            << static_cast<int>(sample.mask.at(i, j)) << '\n';
      }
    }
    ++written;
  }
  if (written == 0) {
    throw cascnn::DataError("no test samples match day=" + std::to_string(day) +
                            " interval=" + std::to_string(interval));
  }
  std::cout << "predict: wrote " << written << " matrices to "
            << (dir / "predictions.csv").string() << "\n";
  return 0;
}

int run_compare(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<cascnn::ComparisonRow> rows;
  for (const std::string& run : runs) {
    fs::path path(run);
    if (fs::is_directory(path)) path /= "metrics.json";
    rows.push_back(cascnn::read_comparison_row(path));
  }
  fs::path out_path(out.empty() ? "comparison.csv" : out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  cascnn::write_comparison_csv(rows, out_path);
  std::cout << "compare: wrote " << rows.size() << " rows to " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-term metro origin-destination demand prediction"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from an INI/TOML file (subcommand options go in a"
                 " [subcommand] section)");

  // ---- synth ----
  cascnn::SynthConfig synth_config;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic AFC dataset");
  synth->add_option("--out", synth_out, "Output directory (default runs/synth-<stamp>)");
  synth->add_option("--n", synth_config.network.n, "Number of stations")->capture_default_str();
  synth->add_option("--days", synth_config.n_days, "Number of weekdays")->capture_default_str();
  synth->add_option("--seed", synth_config.seed, "Generator seed")->capture_default_str();
  synth->add_option("--start-date", synth_config.start_date,
                    "First calendar day, YYYY-MM-DD")->capture_default_str();
  synth->add_option("--res-fraction", synth_config.network.residential_fraction,
                    "Fraction of residential stations")->capture_default_str();
  synth->add_option("--per-hop-min", synth_config.network.per_hop_minutes,
                    "Travel minutes between adjacent stations")->capture_default_str();
  synth->add_option("--base-rate", synth_config.profile.base_rate,
                    "Peak-scale mean trips per interval for an adjacent commute pair")
      ->capture_default_str();
  synth->add_option("--distance-decay", synth_config.profile.distance_decay,
                    "Hop scale of the demand decay")->capture_default_str();
  synth->add_option("--offpeak", synth_config.profile.offpeak_level,
                    "Off-peak multiplier floor")->capture_default_str();
  synth->add_option("--am-peak", synth_config.profile.am_peak,
                    "Morning commute peak height")->capture_default_str();
  synth->add_option("--pm-peak", synth_config.profile.pm_peak,
                    "Evening commute peak height")->capture_default_str();
  synth->add_option("--midday", synth_config.profile.midday_level,
                    "Downtown mid-day band height")->capture_default_str();
  synth->add_option("--day-jitter", synth_config.profile.day_jitter,
                    "Std of the day-level volume noise")->capture_default_str();
  synth->add_option("--jitter-rho", synth_config.profile.day_jitter_rho,
                    "Day-to-day correlation of the volume noise")->capture_default_str();

  // ---- ingest ----
  std::string ingest_data, ingest_out;
  GridOptions ingest_grid;
  PipelineOptions ingest_pipeline;
  std::uint64_t ingest_seed = 42;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset and report extraction totals");
  ingest->add_option("--data", ingest_data, "Dataset directory (afc.csv + manifest.json)")
      ->required();
  ingest->add_option("--out", ingest_out, "Output directory (default runs/ingest-<stamp>)");
  ingest->add_option("--seed", ingest_seed, "Split seed")->capture_default_str();
  add_grid_options(ingest, ingest_grid);
  add_pipeline_options(ingest, ingest_pipeline);

  // ---- stats ----
  std::string stats_data, stats_out;
  std::vector<std::size_t> stats_intervals;
  GridOptions stats_grid;
  PipelineOptions stats_pipeline;
  std::uint64_t stats_seed = 42;
  auto* stats = app.add_subcommand("stats", "Sparsity and attraction-degree reports");
  stats->add_option("--data", stats_data, "Dataset directory")->required();
  stats->add_option("--out", stats_out, "Output directory (default runs/stats-<stamp>)");
  stats->add_option("--intervals", stats_intervals,
                    "Interval indices to report (default: all)")->delimiter(',');
  stats->add_option("--seed", stats_seed, "Split seed")->capture_default_str();
  add_grid_options(stats, stats_grid);
  add_pipeline_options(stats, stats_pipeline);

  // ---- train ----
  std::string train_data, train_out;
  std::uint64_t train_seed = 42;
  GridOptions train_grid;
  PipelineOptions train_pipeline;
  ModelOptions train_model;
  TrainOptions train_options;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Run directory (default runs/train-<stamp>)");
  train->add_option("--seed", train_seed,
                    "Seed for init, shuffling, and the split")->capture_default_str();
  add_grid_options(train, train_grid);
  add_pipeline_options(train, train_pipeline);
  train->add_option("--model", train_model.model, "Architecture: cascnn or cnn2d")
      ->capture_default_str();
  train->add_option("--kernels", train_model.kernels,
                    "Split-convolution kernel sizes")->delimiter(',')->capture_default_str();
  train->add_option("--filters1", train_model.filters1,
                    "Filters in the first split layer")->capture_default_str();
  train->add_option("--filters2", train_model.filters2,
                    "Filters in the second split layer")->capture_default_str();
  train->add_option("--reduction", train_model.reduction,
                    "Channel-attention reduction R")->capture_default_str();
  train->add_option("--ablation", train_model.ablations,
                    "Repeatable: no_split, no_mask, no_ca, no_inflow, no_outflow");
  train->add_flag("--ca-after-layer2", train_model.ca_after_layer2,
                  "Also attend after the second split layer");
  train->add_option("--label", train_model.label, "Run label (default derived from ablations)");
  train->add_option("--lr", train_options.lr, "Learning rate")->capture_default_str();
  train->add_option("--batch", train_options.batch_size, "Batch size")->capture_default_str();
  train->add_option("--max-epochs", train_options.max_epochs,
                    "Epoch budget")->capture_default_str();
  train->add_option("--patience", train_options.patience,
                    "Early-stopping patience in epochs")->capture_default_str();
  train->add_option("--optimizer", train_options.optimizer,
                    "adam or sgd")->capture_default_str();

  // ---- eval ----
  std::string eval_run, eval_data, eval_out;
  bool eval_per_interval = false, eval_interpret = false;
  std::vector<std::string> eval_pairs;
  auto* eval = app.add_subcommand("eval", "Score a trained run on the test days");
  eval->add_option("--run", eval_run, "Training run directory")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--out", eval_out, "Output directory (default runs/eval-<stamp>)");
  eval->add_flag("--per-interval", eval_per_interval, "Also emit per-interval metrics");
  eval->add_flag("--interpret", eval_interpret,
                 "Emit per-station inflow volume vs gate weight and their correlation");
  eval->add_option("--pairs", eval_pairs,
                   "OD pairs to dump as ORIGIN:DESTINATION series")->delimiter(',');

  // ---- predict ----
  std::string predict_run, predict_data, predict_out;
  long predict_day = -1, predict_interval = -1;
  auto* predict = app.add_subcommand("predict", "Write raw-scale test predictions");
  predict->add_option("--run", predict_run, "Training run directory")->required();
  predict->add_option("--data", predict_data, "Dataset directory")->required();
  predict->add_option("--out", predict_out, "Output directory (default runs/predict-<stamp>)");
  predict->add_option("--day", predict_day, "Restrict to one day index");
  predict->add_option("--interval", predict_interval, "Restrict to one interval index");

  // ---- compare ----
  std::vector<std::string> compare_runs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Merge eval reports into one comparison CSV");
  compare->add_option("runs", compare_runs, "Eval output directories or metrics.json paths")
      ->required();
  compare->add_option("--out", compare_out, "Output CSV path (default comparison.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_out);
    if (ingest->parsed()) {
      return run_ingest(ingest_data, ingest_out, ingest_grid, ingest_pipeline, ingest_seed);
    }
    if (stats->parsed()) {
      return run_stats(stats_data, stats_out, stats_intervals, stats_grid, stats_pipeline,
                       stats_seed);
    }
    if (train->parsed()) {
      return run_train(train_data, train_out, train_seed, train_grid, train_pipeline, train_model,
                       train_options);
    }
    if (eval->parsed()) {
      return run_eval(eval_run, eval_data, eval_out, eval_per_interval, eval_interpret,
                      eval_pairs);
    }
    if (predict->parsed()) {
      return run_predict(predict_run, predict_data, predict_out, predict_day, predict_interval);
    }
    if (compare->parsed()) return run_compare(compare_runs, compare_out);
  } catch (const cascnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cascnn::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cascnn::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cascnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const cascnn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
