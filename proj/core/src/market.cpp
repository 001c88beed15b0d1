#include "datamarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace datamarket {

std::string ValidationError::join(const std::vector<FieldError>& errors) {
  std::ostringstream out;
  out << "invalid market parameters:";
  for (const auto& e : errors) out << "\n  " << e.field << ": " << e.message;
  return out.str();
}

ValidationError::ValidationError(std::vector<FieldError> errors)
    : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}

ValidationError::ValidationError(std::string field, std::string message)
    : ValidationError(std::vector<FieldError>{
          {std::move(field), std::move(message)}}) {}

ParamReport validate_params(const MarketParams& params) {
  std::vector<ValidationError::FieldError> errors;
  auto bad = [&errors](std::string field, std::string message) {
    errors.push_back({std::move(field), std::move(message)});
  };

  if (!(params.sigma_low > 0.0) || !std::isfinite(params.sigma_low)) {
    bad("sigma_low", "must be finite and positive");
  }
  if (!(params.sigma_high > 0.0) || !std::isfinite(params.sigma_high)) {
    bad("sigma_high", "must be finite and positive");
  }
  if (params.sigma_low > 0.0 && params.sigma_high > 0.0 &&
      !(params.sigma_high > params.sigma_low)) {
    bad("sigma_high", "must exceed sigma_low (the types must be distinct)");
  }
  if (!(params.mu > 0.0) || !(params.mu < 1.0)) {
    bad("mu", "prior must lie strictly inside (0, 1)");
  }
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) {
    bad("lambda", "must be finite and positive");
  }
  if (params.num_sellers < 1) {
    bad("K", "need at least one seller");
  }
  if (params.max_free_samples != 0 && params.max_free_samples < 2) {
    bad("M", "must be 0 or at least 2 (a single sample is uninformative)");
  }
  if (!params.cost_model) {
    bad("cost_model", "must be set");
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  // Well-posedness diagnostics. psi(max_cost) is the worst virtual cost a
  // winning seller can carry; the relaxed allocation is smallest there with
  // the low-variance posterior.
  ParamReport report;
  const double psi_max = params.cost_model->virtual_cost(
      params.cost_model->max_cost());
  const double root = std::sqrt(params.lambda * psi_max);
  report.floor_allocation_bound = params.sigma_low / root;
  report.floor_bound_at_least_three = report.floor_allocation_bound >= 3.0;
  report.approx_condition_slack = params.sigma_low - params.alpha * root;
  report.approx_condition_holds = report.approx_condition_slack > 0.0;
  return report;
}

std::vector<int> legal_strategy_set(int max_free_samples) {
  if (max_free_samples != 0 && max_free_samples < 2) {
    throw std::invalid_argument(
        "legal_strategy_set: max must be 0 or at least 2");
  }
  std::vector<int> set{0};
  for (int m = 2; m <= max_free_samples; ++m) set.push_back(m);
  return set;
}

StrategyProfile::StrategyProfile(std::vector<int> free_samples,
                                 int max_free_samples)
    : samples_(std::move(free_samples)), max_(max_free_samples) {
  if (samples_.empty()) {
    throw std::invalid_argument("StrategyProfile: need at least one seller");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const int m = samples_[i];
    const bool legal = m == 0 || (m >= 2 && m <= max_);
    if (!legal) {
      std::ostringstream msg;
      msg << "StrategyProfile: seller " << i << " plays " << m
          << " which is outside {0, 2..," << max_ << "}";
      throw std::invalid_argument(msg.str());
    }
  }
}

StrategyProfile StrategyProfile::symmetric(int num_sellers, int m,
                                           int max_free_samples) {
  if (num_sellers < 1) {
    throw std::invalid_argument("StrategyProfile: need at least one seller");
  }
  return StrategyProfile(
      std::vector<int>(static_cast<std::size_t>(num_sellers), m),
      max_free_samples);
}

StrategyProfile StrategyProfile::with_deviation(std::size_t index,
                                                int m) const {
  if (index >= samples_.size()) {
    throw std::out_of_range("StrategyProfile: seller index out of range");
  }
  std::vector<int> copy = samples_;
  copy[index] = m;
  return StrategyProfile(std::move(copy), max_);
}

}  // namespace datamarket
