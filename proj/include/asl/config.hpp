#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "asl/augment.hpp"

namespace asl {

// Flat key = value config for training runs. Every field has the default
// used for the reported runs; the whole resolved config is echoed into the
// metrics header so runs are self-describing.
struct TrainConfig {
  std::string architecture;  // mvgg5 | mvgg9 | proposed
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double test_fraction = 0.2;
  double dropout = 0.5;
  double rho = 0.95;
  double epsilon = 1e-6;
  std::uint64_t seed = 1;
  std::string precision = "f32";  // f32 | f64
  bool wall_clock = true;         // timing = wall | none
  bool augment_enabled = false;
  AugmentConfig augment;
  // When unset, augmentation uses the run seed.
  std::optional<std::uint64_t> augment_seed;

  void validate() const;
};

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

// Canonical serialization; parse(serialize(cfg)) reproduces cfg.
std::string train_config_to_text(const TrainConfig& cfg);

}  // namespace asl
