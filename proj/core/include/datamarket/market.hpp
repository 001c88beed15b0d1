#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "datamarket/cost_model.hpp"

// Market primitives: the parameter block shared by every component, seller
// realizations, and strategy profiles over the legal free-sample counts.

namespace datamarket {

enum class VarianceType { Low, High };

// All structural parameters of one market configuration. sigma_low/sigma_high
// are standard deviations (the quality ratio is sigma_high / sigma_low).
struct MarketParams {
  double sigma_low = 0.0;
  double sigma_high = 0.0;
  double mu = 0.0;      // prior probability of the low-variance (good) type
  double lambda = 0.0;  // buyer's payment weight
  int num_sellers = 0;
  int max_free_samples = 0;
  std::shared_ptr<const CostModel> cost_model;
  // Multiplier alpha in the well-posedness condition
  // sigma_low > alpha * sqrt(lambda * psi(max_cost)); reported as a
  // diagnostic, not enforced as a hard failure.
  double alpha = 3.0;

  double ratio() const { return sigma_high / sigma_low; }
  double low_var() const { return sigma_low * sigma_low; }
  double high_var() const { return sigma_high * sigma_high; }
  double variance_of(VarianceType t) const {
    return t == VarianceType::Low ? low_var() : high_var();
  }
};

// Thrown by validate_params and the config loader; carries per-field
// diagnostics so a CLI caller can print exactly which inputs are bad.
class ValidationError : public std::invalid_argument {
 public:
  struct FieldError {
    std::string field;
    std::string message;
  };

  explicit ValidationError(std::vector<FieldError> errors);
  ValidationError(std::string field, std::string message);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<FieldError>& errors);
  std::vector<FieldError> errors_;
};

// Derived diagnostics returned by validate_params on success.
struct ParamReport {
  // Worst-case value of the relaxed allocation before flooring:
  // sigma_low / sqrt(lambda * psi(max_cost)). Flooring is harmless when this
  // is comfortably large.
  double floor_allocation_bound = 0.0;
  bool floor_bound_at_least_three = false;
  // Slack of sigma_low - alpha * sqrt(lambda * psi(max_cost)).
  double approx_condition_slack = 0.0;
  bool approx_condition_holds = false;
};

// Checks structural validity (throws ValidationError listing every violated
// field) and returns the well-posedness diagnostics.
ParamReport validate_params(const MarketParams& params);

// Free-sample counts a seller may commit to: {0} ∪ {2, ..., max}. One sample
// is excluded because a single draw carries no variance information.
std::vector<int> legal_strategy_set(int max_free_samples);

// One seller's private draw within a round. sample_variance is present iff
// the seller committed to at least two free samples.
struct SellerRealization {
  VarianceType type = VarianceType::Low;
  double cost = 0.0;
  int free_samples = 0;
  std::optional<double> sample_variance;
};

// A vector of per-seller free-sample commitments, all drawn from the legal
// set. Construction validates, so a StrategyProfile is legal by type.
class StrategyProfile {
 public:
  StrategyProfile(std::vector<int> free_samples, int max_free_samples);

  static StrategyProfile symmetric(int num_sellers, int m,
                                   int max_free_samples);

  // Copy of this profile with seller `index` playing `m` instead.
  StrategyProfile with_deviation(std::size_t index, int m) const;

  std::span<const int> free_samples() const noexcept { return samples_; }
  int max_free_samples() const noexcept { return max_; }
  std::size_t num_sellers() const noexcept { return samples_.size(); }
  int operator[](std::size_t i) const { return samples_.at(i); }

 private:
  std::vector<int> samples_;
  int max_;
};

}  // namespace datamarket
