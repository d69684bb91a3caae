#pragma once

#include "stsa/client.hpp"
#include "stsa/statistics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stsa {

enum class DataSource { synthetic, files };
enum class PartitionScope { per_task, global };

// Everything needed to reproduce a run. Serialised as `key = value` lines;
// see parse_config for the accepted keys.
struct ExperimentConfig {
  std::string preset = "scratch";

  DataSource source = DataSource::synthetic;
  std::string train_path;
  std::string test_path;

  std::uint32_t synth_classes = 100;
  int synth_dim = 64;
  double synth_separation = 1.0;
  double synth_noise_std = 0.3;
  std::uint32_t synth_train_per_class = 100;
  std::uint32_t synth_test_per_class = 20;

  int tasks = 10;
  std::optional<std::uint32_t> first_task_classes;
  std::optional<std::uint64_t> class_order_seed;
  int clients = 5;
  double beta = 0.5;
  PartitionScope partition = PartitionScope::per_task;
  std::uint64_t seed = 0;

  int map_dim = 5000;
  bool map_enabled = true;
  MapScaling map_scaling = MapScaling::unit;
  double gamma = 1e4;

  UploadMode mode = UploadMode::full;
  int dummy_clients = 50;
  DummySplit dummy_split = DummySplit::uniform;
  double noise_q = 0.0;
  double noise_s = 0.0;
  int elem_bytes = 4;
  bool oracle_check = false;

  std::vector<int> study_clients = {2, 5, 10, 50};
  int study_trials = 1000;

  void validate() const;
};

// Named defaults: "scratch" (M = 5000, γ = 1e4, K_D = 50) and
// "pretrained" (M = 1250, γ = 1e6, K_D = 10).
void apply_preset(ExperimentConfig& cfg, std::string_view name);

// Parses `key = value` lines; `#` starts a comment. A `preset` key is applied
// before every other key regardless of its position. Unknown keys and
// malformed values raise ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical key/value listing, the inverse of parse_config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);
std::string format_config(const ExperimentConfig& cfg);

const char* to_string(UploadMode mode);
UploadMode parse_mode(std::string_view text);

}  // namespace stsa
