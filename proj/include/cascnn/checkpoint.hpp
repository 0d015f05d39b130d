#pragma once

#include <filesystem>
#include <memory>

#include "cascnn/model.hpp"

namespace cascnn {

// Checkpoint = JSON manifest (model kind, config, parameter name/shape/offset
// table) plus a flat little-endian float64 companion file. Parameter order is
// the model's registration order, so two identical models write identical
// bytes.
void save_checkpoint(Model& model, const std::filesystem::path& manifest_path,
                     const std::filesystem::path& data_path);

// Rebuilds the model from the embedded config and loads the weights.
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& manifest_path);

ModelConfig model_config_from_json_file(const std::filesystem::path& manifest_path);

}  // namespace cascnn
