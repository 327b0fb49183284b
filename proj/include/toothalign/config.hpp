#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "toothalign/augment.hpp"
#include "toothalign/losses.hpp"
#include "toothalign/swin.hpp"

namespace toothalign {

/// Run configuration. JSON layout:
///   { "seed": 0, "ordering": "arch_line", "n_points": 512, "window": 8,
///     "labial_positive": true, "augment": {...}, "loss": {...} }
/// Every key is optional; unknown keys are rejected.
struct Config {
  std::uint64_t seed = 0;
  OrderingMode ordering = OrderingMode::arch_line;
  std::size_t n_points = kPointsPerTooth;
  std::size_t window = 8;
  bool labial_positive = true;
  AugmentConfig augment;
  LossWeights loss;

  /// Throws ConfigError.
  void validate() const;
  SwinConfig swin() const;
  ImageOptions image_options() const { return {seed, labial_positive}; }
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong types or
/// out-of-range values.
Config config_from_json_text(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string config_to_json_text(const Config& c);

}  // namespace toothalign
