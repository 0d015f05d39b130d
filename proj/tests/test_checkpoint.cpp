#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "cascnn/checkpoint.hpp"
#include "oracles.hpp"

using namespace cascnn;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("checkpoint round trip restores weights and predictions bit-exactly") {
  ModelConfig config;
  config.n = 5;
  config.filters_layer1 = 4;
  CasCnn model(config, 123);

  const auto dir = std::filesystem::temp_directory_path() / "cascnn_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(model, dir / "checkpoint.json", dir / "checkpoint.f64");

  std::unique_ptr<Model> loaded = load_checkpoint(dir / "checkpoint.json");
  CHECK(loaded->kind() == "cascnn");
  CHECK(loaded->config().n == 5);

  std::vector<Parameter*> orig = model.parameters();
  std::vector<Parameter*> back = loaded->parameters();
  REQUIRE(orig.size() == back.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i]->name == back[i]->name);
    REQUIRE(orig[i]->value.size() == back[i]->value.size());
    CHECK(std::memcmp(orig[i]->value.data(), back[i]->value.data(),
                      orig[i]->value.size() * sizeof(double)) == 0);
  }

  std::mt19937_64 rng(5);
  Tensor history = oracles::random_tensor({config.history_days, config.n, config.n}, rng);
  Tensor inflow = oracles::random_tensor({config.flow_steps, config.n}, rng);
  Tensor outflow = oracles::random_tensor({config.flow_steps, config.n}, rng);
  Tensor a = model.forward(history, inflow, outflow);
  Tensor b = loaded->forward(history, inflow, outflow);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("two saves of the same model are byte-identical") {
  ModelConfig config;
  config.n = 3;
  config.filters_layer1 = 2;
  config.no_split = true;
  CasCnn model(config, 9);

  const auto dir = std::filesystem::temp_directory_path() / "cascnn_ckpt_idem";
  std::filesystem::create_directories(dir / "a");
  std::filesystem::create_directories(dir / "b");
  save_checkpoint(model, dir / "a" / "checkpoint.json", dir / "a" / "checkpoint.f64");
  save_checkpoint(model, dir / "b" / "checkpoint.json", dir / "b" / "checkpoint.f64");
  CHECK(read_file(dir / "a" / "checkpoint.f64") == read_file(dir / "b" / "checkpoint.f64"));
  CHECK(read_file(dir / "a" / "checkpoint.json") == read_file(dir / "b" / "checkpoint.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loader validates structure") {
  const auto dir = std::filesystem::temp_directory_path() / "cascnn_ckpt_bad";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"format\": \"something-else\"}";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "broken.json"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);

  // Baseline checkpoints rebuild as the baseline model.
  ModelConfig config;
  config.n = 4;
  PlainCnn2d baseline(config, 2);
  save_checkpoint(baseline, dir / "cnn.json", dir / "cnn.f64");
  std::unique_ptr<Model> loaded = load_checkpoint(dir / "cnn.json");
  CHECK(loaded->kind() == "cnn2d");
  std::filesystem::remove_all(dir);
}
