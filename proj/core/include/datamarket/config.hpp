#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "datamarket/market.hpp"

// JSON configuration ingestion.
//
// A config names the market primitives plus run defaults. The quality ratio
// may be given either directly ("ratio") or via "sigma_low" — exactly one of
// the two. Unknown keys are rejected so that typos fail loudly instead of
// silently running defaults.

namespace datamarket {

struct SimulationConfig {
  MarketParams params;
  double ratio = 0.0;  // always populated: sigma_high / sigma_low
  std::int64_t n_rounds = 100000;
  std::uint64_t seed = 0;
  std::string distribution = "uniform";
};

// Parses and validates; throws ValidationError with one entry per bad field
// (file-level problems such as malformed JSON surface as a single pseudo
// field named "<config>").
SimulationConfig parse_config_text(const std::string& text);
SimulationConfig load_config(const std::filesystem::path& path);

// Canonical JSON snapshot of a config (sorted keys, round-trip-exact
// numbers). Embedded in run manifests; parsing it back yields an equivalent
// config, which is what makes manifest-driven reruns exact.
std::string config_to_json(const SimulationConfig& config);

}  // namespace datamarket
