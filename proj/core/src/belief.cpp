#include "datamarket/belief.hpp"

#include <cmath>
#include <stdexcept>

#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

// Numerically stable 1 / (1 + e^t).
double inverse_logit_of_negative(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double mean_var_from_pi_high(const MarketParams& params, double pi_high) {
  return params.low_var() + pi_high * (params.high_var() - params.low_var());
}

// Posterior on the high-variance type given the log likelihood ratio
// log[f(S^2|Low)/f(S^2|High)].
double pi_high_from_log_ratio(const MarketParams& params, double log_ratio) {
  const double log_prior_odds = std::log(params.mu / (1.0 - params.mu));
  return inverse_logit_of_negative(log_prior_odds + log_ratio);
}

void require_signal_count(int m) {
  if (m < 2) {
    throw std::invalid_argument(
        "belief update: need at least two samples for a sample variance");
  }
}

}  // namespace

BeliefState prior_belief(const MarketParams& params) {
  BeliefState b;
  b.pi_high = 1.0 - params.mu;
  b.posterior_mean_var = mean_var_from_pi_high(params, b.pi_high);
  return b;
}

double draw_sample_variance(const MarketParams& params, VarianceType type,
                            int m, std::mt19937_64& gen) {
  require_signal_count(m);
  const double dof = static_cast<double>(m - 1);
  return params.variance_of(type) * rng::chi_squared(gen, dof) / dof;
}

double draw_sample_variance_from_raw(const MarketParams& params,
                                     VarianceType type, int m,
                                     std::mt19937_64& gen) {
  require_signal_count(m);
  const double sigma = std::sqrt(params.variance_of(type));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = sigma * rng::standard_normal(gen);
    sum += x;
    sum_sq += x * x;
  }
  const double n = static_cast<double>(m);
  const double mean = sum / n;
  // Guard against tiny negative values from cancellation.
  const double ss = std::max(0.0, sum_sq - n * mean * mean);
  return ss / (n - 1.0);
}

double log_likelihood_ratio(const MarketParams& params, int m,
                            double sample_variance) {
  require_signal_count(m);
  if (!(sample_variance >= 0.0)) {
    throw std::invalid_argument(
        "belief update: sample variance must be nonnegative");
  }
  const double dof = static_cast<double>(m - 1);
  const double log_scale = std::log(params.sigma_high / params.sigma_low);
  const double kappa = (params.high_var() - params.low_var()) /
                       (2.0 * params.high_var() * params.low_var());
  return dof * log_scale - kappa * dof * sample_variance;
}

double likelihood_ratio(const MarketParams& params, int m,
                        double sample_variance) {
  return std::exp(log_likelihood_ratio(params, m, sample_variance));
}

BeliefState posterior_from_sample_variance(
    const MarketParams& params, int m,
    std::optional<double> sample_variance) {
  if (m == 0) {
    if (sample_variance.has_value()) {
      throw std::invalid_argument(
          "belief update: a seller with no free samples has no sample "
          "variance");
    }
    return prior_belief(params);
  }
  require_signal_count(m);
  if (!sample_variance.has_value()) {
    throw std::invalid_argument(
        "belief update: m >= 2 requires an observed sample variance");
  }
  BeliefState b;
  b.pi_high = pi_high_from_log_ratio(
      params, log_likelihood_ratio(params, m, *sample_variance));
  b.posterior_mean_var = mean_var_from_pi_high(params, b.pi_high);
  return b;
}

double posterior_mean_lower_bound(const MarketParams& params, int m) {
  if (m == 0) return prior_belief(params).posterior_mean_var;
  require_signal_count(m);
  // S^2 = 0 maximizes the likelihood ratio, hence minimizes pi_high and the
  // posterior mean variance. Reuses the update path verbatim so the bound is
  // attained exactly.
  const double pi = pi_high_from_log_ratio(
      params, log_likelihood_ratio(params, m, 0.0));
  return mean_var_from_pi_high(params, pi);
}

BeliefShiftThresholds belief_shift_thresholds(const MarketParams& params,
                                              int m, double delta_low,
                                              double delta_high) {
  require_signal_count(m);
  const double mu = params.mu;
  if (!(delta_low > 0.0) || !(delta_low < 1.0 - mu)) {
    throw std::invalid_argument(
        "belief_shift_thresholds: delta_low must lie in (0, 1 - mu)");
  }
  if (!(delta_high > 0.0) || !(delta_high < mu)) {
    throw std::invalid_argument(
        "belief_shift_thresholds: delta_high must lie in (0, mu)");
  }
  const double dof = static_cast<double>(m - 1);
  const double log_scale = std::log(params.sigma_high / params.sigma_low);
  const double var_gap = params.high_var() - params.low_var();

  BeliefShiftThresholds out;
  // pi_low >= mu + delta_low  <=>  likelihood ratio >= t_plus.
  out.t_plus = (1.0 - mu) * (mu + delta_low) / (mu * (1.0 - mu - delta_low));
  out.z_plus = (2.0 * params.high_var() / var_gap) *
               (dof * log_scale - std::log(out.t_plus));
  // pi_low <= mu - delta_high  <=>  likelihood ratio <= t_minus.
  out.t_minus = (1.0 - mu) * (mu - delta_high) / (mu * (1.0 - mu + delta_high));
  out.z_minus = (2.0 * params.low_var() / var_gap) *
                (dof * log_scale - std::log(out.t_minus));
  return out;
}

}  // namespace datamarket
