#pragma once

#include <optional>
#include <random>

#include "datamarket/market.hpp"

// Buyer belief updating from free samples.
//
// A seller of variance type sigma^2 who commits to m >= 2 free samples
// reveals the sample variance S^2 of m i.i.d. N(theta, sigma^2) draws, so
// (m-1) S^2 / sigma^2 is chi-squared with m-1 degrees of freedom. The buyer
// starts from prior mu on the low-variance type and updates by likelihood
// ratio. Everything here is computed in log space: at large quality ratios
// the raw ratio overflows long before the posterior saturates.

namespace datamarket {

// Posterior over a single seller's type. posterior_mean_var is the buyer's
// expected error variance E[sigma^2 | S^2], the quantity the mechanism
// scores sellers by.
struct BeliefState {
  double pi_high = 0.0;  // posterior probability of the high-variance type
  double posterior_mean_var = 0.0;

  double pi_low() const noexcept { return 1.0 - pi_high; }
};

// Thresholds governing how likely m samples are to move the posterior on the
// low-variance type by at least delta in the correct direction.
//
//   Pr[pi_low >= mu + delta_low  | type = Low ] = F_{chi2(m-1)}(z_plus)
//   Pr[pi_low <= mu - delta_high | type = High] = 1 - F_{chi2(m-1)}(z_minus)
//
// t_plus / t_minus are the corresponding likelihood-ratio cutoffs. A negative
// z means the shift is unreachable with m samples.
struct BeliefShiftThresholds {
  double t_plus = 0.0;
  double z_plus = 0.0;
  double t_minus = 0.0;
  double z_minus = 0.0;
};

// Buyer's belief before any samples: pi_high = 1 - mu.
BeliefState prior_belief(const MarketParams& params);

// Draws S^2 for a seller of the given type committing to m >= 2 samples,
// using the chi-squared representation directly.
double draw_sample_variance(const MarketParams& params, VarianceType type,
                            int m, std::mt19937_64& gen);

// Same distribution via the definition: draws m raw normal observations and
// computes their sample variance. Slower; kept as an independent route for
// cross-checking the chi-squared path.
double draw_sample_variance_from_raw(const MarketParams& params,
                                     VarianceType type, int m,
                                     std::mt19937_64& gen);

// Likelihood ratio f(S^2 | Low) / f(S^2 | High) for m >= 2 samples, and its
// logarithm. Values above 1 favour the low-variance type.
double log_likelihood_ratio(const MarketParams& params, int m,
                            double sample_variance);
double likelihood_ratio(const MarketParams& params, int m,
                        double sample_variance);

// Posterior after observing m free samples with sample variance S^2.
// m == 0 requires an absent S^2 and returns the prior; m >= 2 requires a
// present, nonnegative S^2. Anything else (m == 1, missing or negative S^2)
// throws std::invalid_argument.
BeliefState posterior_from_sample_variance(
    const MarketParams& params, int m,
    std::optional<double> sample_variance);

// Infimum of the posterior mean variance over all signals: attained at
// S^2 = 0, where the evidence for the low type is strongest. For m == 0 this
// is just the prior mean variance. Computed through the same code path as
// posterior_from_sample_variance, so the two agree exactly at S^2 = 0.
double posterior_mean_lower_bound(const MarketParams& params, int m);

// Cutoffs for delta-sized posterior shifts; requires m >= 2,
// delta_low in (0, 1 - mu) and delta_high in (0, mu).
BeliefShiftThresholds belief_shift_thresholds(const MarketParams& params,
                                              int m, double delta_low,
                                              double delta_high);

}  // namespace datamarket
