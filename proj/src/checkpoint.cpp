#include "cascnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace cascnn {

namespace {

void write_f64_le(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

double read_f64_le(std::ifstream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw FormatError("checkpoint data file truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

nlohmann::json config_to_json(const ModelConfig& config) {
  return {{"n", config.n},
          {"history_days", config.history_days},
          {"flow_steps", config.flow_steps},
          {"kernels", config.kernels},
          {"filters_layer1", config.filters_layer1},
          {"filters_layer2", config.filters_layer2},
          {"reduction", config.reduction},
          {"no_split", config.no_split},
          {"no_channel_attention", config.no_channel_attention},
          {"no_inflow", config.no_inflow},
          {"no_outflow", config.no_outflow},
          {"ca_after_layer2", config.ca_after_layer2}};
}

ModelConfig config_from_json(const nlohmann::json& doc) {
  ModelConfig config;
  config.n = doc.at("n").get<std::size_t>();
  config.history_days = doc.at("history_days").get<std::size_t>();
  config.flow_steps = doc.at("flow_steps").get<std::size_t>();
  config.kernels = doc.at("kernels").get<std::vector<std::size_t>>();
  config.filters_layer1 = doc.at("filters_layer1").get<std::size_t>();
  config.filters_layer2 = doc.at("filters_layer2").get<std::size_t>();
  config.reduction = doc.at("reduction").get<std::size_t>();
  config.no_split = doc.at("no_split").get<bool>();
  config.no_channel_attention = doc.at("no_channel_attention").get<bool>();
  config.no_inflow = doc.at("no_inflow").get<bool>();
  config.no_outflow = doc.at("no_outflow").get<bool>();
  config.ca_after_layer2 = doc.at("ca_after_layer2").get<bool>();
  return config;
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& manifest_path,
                     const std::filesystem::path& data_path) {
  nlohmann::json manifest;
  manifest["format"] = "cascnn-checkpoint-v1";
  manifest["model"] = model.kind();
  manifest["config"] = config_to_json(model.config());
  manifest["data_file"] = data_path.filename().string();

  std::ofstream data(data_path, std::ios::binary);
  if (!data) throw DataError("cannot write " + data_path.string());

  nlohmann::json params = nlohmann::json::array();
  std::size_t offset = 0;
  for (Parameter* param : model.parameters()) {
    params.push_back({{"name", param->name}, {"shape", param->value.shape()}, {"offset", offset}});
    for (double v : param->value.values()) write_f64_le(data, v);
    offset += param->value.size();
  }
  manifest["parameters"] = std::move(params);
  manifest["total_values"] = offset;

  std::ofstream out(manifest_path);
  if (!out) throw DataError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

ModelConfig model_config_from_json_file(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  in >> manifest;
  return config_from_json(manifest.at("config"));
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "cascnn-checkpoint-v1") {
    throw FormatError("unknown checkpoint format in " + manifest_path.string());
  }

  const ModelConfig config = config_from_json(manifest.at("config"));
  // Seed is irrelevant: every parameter is overwritten below.
  std::unique_ptr<Model> model = build_model(manifest.at("model").get<std::string>(), config, 0);

  const auto data_path = manifest_path.parent_path() / manifest.at("data_file").get<std::string>();
  std::ifstream data(data_path, std::ios::binary);
  if (!data) throw DataError("cannot open " + data_path.string());

  const auto& param_docs = manifest.at("parameters");
  std::vector<Parameter*> params = model->parameters();
  if (param_docs.size() != params.size()) {
    throw FormatError("checkpoint lists " + std::to_string(param_docs.size()) +
                      " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& doc = param_docs[i];
    if (doc.at("name").get<std::string>() != params[i]->name) {
      throw FormatError("checkpoint parameter '" + doc.at("name").get<std::string>() +
                        "' does not match model parameter '" + params[i]->name + "'");
    }
    const auto shape = doc.at("shape").get<Shape>();
    if (shape != params[i]->value.shape()) {
      throw DimensionError("checkpoint shape mismatch for parameter " + params[i]->name);
    }
    for (double& v : params[i]->value.values()) v = read_f64_le(data);
  }
  return model;
}

}  // namespace cascnn
