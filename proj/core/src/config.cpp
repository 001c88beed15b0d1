#include "datamarket/config.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

namespace datamarket {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "sigma_high", "sigma_low", "ratio",   "mu",   "lambda", "c_min",
    "c_max",      "K",         "M",       "n_rounds", "seed", "distribution",
    "alpha"};

class FieldCollector {
 public:
  void bad(std::string field, std::string message) {
    errors_.push_back({std::move(field), std::move(message)});
  }
  void throw_if_any() {
    if (!errors_.empty()) throw ValidationError(std::move(errors_));
  }

 private:
  std::vector<ValidationError::FieldError> errors_;
};

bool has_number(const json& j, const char* key) {
  return j.contains(key) && j.at(key).is_number();
}

double require_number(const json& j, const char* key, FieldCollector& fields,
                      bool required, double fallback) {
  if (!j.contains(key)) {
    if (required) fields.bad(key, "missing required key");
    return fallback;
  }
  if (!j.at(key).is_number()) {
    fields.bad(key, "must be a number");
    return fallback;
  }
  return j.at(key).get<double>();
}

}  // namespace

SimulationConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<config>",
                          std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ValidationError("<config>", "top level must be a JSON object");
  }

  FieldCollector fields;
  for (const auto& [key, value] : j.items()) {
    if (!kKnownKeys.count(key)) fields.bad(key, "unknown key");
  }

  SimulationConfig config;
  const double sigma_high =
      require_number(j, "sigma_high", fields, /*required=*/true, 0.0);
  const bool has_ratio = j.contains("ratio");
  const bool has_sigma_low = j.contains("sigma_low");
  if (has_ratio == has_sigma_low) {
    fields.bad(has_ratio ? "ratio" : "sigma_low",
               "exactly one of ratio and sigma_low must be given");
  }
  double sigma_low = 0.0;
  if (has_sigma_low && !has_ratio) {
    sigma_low = require_number(j, "sigma_low", fields, true, 0.0);
    if (sigma_low > 0.0) config.ratio = sigma_high / sigma_low;
  } else if (has_ratio && !has_sigma_low) {
    config.ratio = require_number(j, "ratio", fields, true, 0.0);
    if (!(config.ratio > 1.0)) {
      fields.bad("ratio", "must exceed 1 (sigma_high must exceed sigma_low)");
    } else {
      sigma_low = sigma_high / config.ratio;
    }
  }

  const double mu = require_number(j, "mu", fields, true, 0.0);
  const double lambda = require_number(j, "lambda", fields, true, 0.0);
  const double c_min = require_number(j, "c_min", fields, true, 0.0);
  const double c_max = require_number(j, "c_max", fields, true, 0.0);
  const double k_sellers = require_number(j, "K", fields, true, 0.0);
  const double max_samples = require_number(j, "M", fields, true, 0.0);
  const double n_rounds =
      require_number(j, "n_rounds", fields, false, 100000.0);
  const double alpha = require_number(j, "alpha", fields, false, 3.0);

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      fields.bad("seed", "must be a nonnegative integer");
    } else {
      config.seed = j.at("seed").get<std::uint64_t>();
    }
  }
  if (j.contains("distribution")) {
    if (!j.at("distribution").is_string()) {
      fields.bad("distribution", "must be a string");
    } else {
      config.distribution = j.at("distribution").get<std::string>();
    }
  }
  if (config.distribution != "uniform") {
    fields.bad("distribution",
               "unsupported distribution (only \"uniform\" is available)");
  }
  if (has_number(j, "K") && (k_sellers != std::floor(k_sellers))) {
    fields.bad("K", "must be an integer");
  }
  if (has_number(j, "M") && (max_samples != std::floor(max_samples))) {
    fields.bad("M", "must be an integer");
  }
  if (n_rounds != std::floor(n_rounds) || n_rounds < 1) {
    fields.bad("n_rounds", "must be a positive integer");
  }
  // Range checks only apply to values that actually parsed; a missing or
  // mistyped key has already been reported once above.
  if (has_number(j, "c_min") && !(c_min > 0.0)) {
    fields.bad("c_min", "must be positive");
  }
  if (has_number(j, "c_min") && has_number(j, "c_max") && !(c_max > c_min)) {
    fields.bad("c_max", "must exceed c_min");
  }
  fields.throw_if_any();

  config.params.sigma_high = sigma_high;
  config.params.sigma_low = sigma_low;
  config.params.mu = mu;
  config.params.lambda = lambda;
  config.params.num_sellers = static_cast<int>(k_sellers);
  config.params.max_free_samples = static_cast<int>(max_samples);
  config.params.alpha = alpha;
  config.params.cost_model = std::make_shared<UniformCostModel>(c_min, c_max);
  config.n_rounds = static_cast<std::int64_t>(n_rounds);

  validate_params(config.params);  // throws ValidationError on bad values
  return config;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("<config>", "cannot open file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string config_to_json(const SimulationConfig& config) {
  json j;
  j["sigma_high"] = config.params.sigma_high;
  j["sigma_low"] = config.params.sigma_low;
  j["mu"] = config.params.mu;
  j["lambda"] = config.params.lambda;
  j["c_min"] = config.params.cost_model->min_cost();
  j["c_max"] = config.params.cost_model->max_cost();
  j["K"] = config.params.num_sellers;
  j["M"] = config.params.max_free_samples;
  j["alpha"] = config.params.alpha;
  j["n_rounds"] = config.n_rounds;
  j["seed"] = config.seed;
  j["distribution"] = config.distribution;
  return j.dump(2);
}

}  // namespace datamarket
