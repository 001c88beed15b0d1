#include "datamarket/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

// integral_a^b floor(sigma_bar / sqrt(lambda * psi(s))) ds, computed exactly
// by walking the breakpoints where the floor drops by one. The floor takes
// value k on (s_{k+1}, s_k] with s_k = psi^{-1}(sigma_bar^2 / (lambda k^2)),
// so the integral is a finite sum of rectangle areas.
double floored_tail_integral(const CostModel& model, double sigma_bar,
                             double lambda, double a, double b) {
  if (!(b > a)) return 0.0;
  const double psi_min = model.virtual_cost(model.min_cost());
  const double psi_max = model.virtual_cost(model.max_cost());
  const double sigma_sq = sigma_bar * sigma_bar;

  const auto level_at = [&](double s) {
    return std::floor(sigma_bar / std::sqrt(lambda * model.virtual_cost(s)));
  };
  const auto breakpoint = [&](double k) {
    const double psi_k = sigma_sq / (lambda * k * k);
    if (psi_k >= psi_max) return model.max_cost();
    if (psi_k <= psi_min) return model.min_cost();
    return model.inverse_virtual_cost(psi_k);
  };

  const auto n_hi = static_cast<std::int64_t>(level_at(a));
  const auto n_lo = static_cast<std::int64_t>(level_at(b));
  if (n_hi <= 0) return 0.0;

  double total = 0.0;
  for (std::int64_t k = std::max<std::int64_t>(n_lo, 1); k <= n_hi; ++k) {
    const double hi = std::min(b, breakpoint(static_cast<double>(k)));
    const double lo = std::max(a, breakpoint(static_cast<double>(k + 1)));
    if (hi > lo) total += static_cast<double>(k) * (hi - lo);
  }
  return total;
}

std::size_t argmin_with_ties(const std::vector<double>& scores,
                             std::mt19937_64& gen) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  // Exact ties only; continuous costs make this a measure-zero event, but a
  // deterministic fallback would bias seller 0 in degenerate setups.
  std::size_t tie_count = 0;
  for (double s : scores) tie_count += (s == scores[best]) ? 1 : 0;
  if (tie_count <= 1) return best;
  auto pick = static_cast<std::size_t>(rng::uniform01(gen) *
                                       static_cast<double>(tie_count));
  pick = std::min(pick, tie_count - 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == scores[best]) {
      if (pick == 0) return i;
      --pick;
    }
  }
  return best;  // unreachable
}

}  // namespace

std::size_t select_winner(const std::vector<BeliefState>& beliefs,
                          const std::vector<double>& costs,
                          const MarketParams& params, std::mt19937_64& gen) {
  if (beliefs.empty() || beliefs.size() != costs.size()) {
    throw std::invalid_argument(
        "select_winner: need matching, non-empty beliefs and costs");
  }
  std::vector<double> scores(beliefs.size());
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    scores[i] = seller_score(beliefs[i], costs[i], *params.cost_model);
  }
  return argmin_with_ties(scores, gen);
}

double relaxed_allocation(double posterior_mean_var, double virtual_cost,
                          double lambda) {
  if (!(posterior_mean_var > 0.0) || !(virtual_cost > 0.0) ||
      !(lambda > 0.0)) {
    throw std::invalid_argument(
        "relaxed_allocation: variance, virtual cost and lambda must be "
        "positive");
  }
  return std::sqrt(posterior_mean_var / (lambda * virtual_cost));
}

std::vector<double> optimal_weights(
    const std::vector<std::int64_t>& allocation,
    const std::vector<double>& posterior_vars) {
  if (allocation.size() != posterior_vars.size() || allocation.empty()) {
    throw std::invalid_argument(
        "optimal_weights: need matching, non-empty inputs");
  }
  std::vector<double> weights(allocation.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < allocation.size(); ++i) {
    if (allocation[i] < 0) {
      throw std::invalid_argument("optimal_weights: negative allocation");
    }
    if (!(posterior_vars[i] > 0.0)) {
      throw std::invalid_argument(
          "optimal_weights: posterior variances must be positive");
    }
    denom += static_cast<double>(allocation[i]) / posterior_vars[i];
  }
  if (!(denom > 0.0)) {
    throw std::invalid_argument(
        "optimal_weights: no seller supplied any data");
  }
  for (std::size_t i = 0; i < allocation.size(); ++i) {
    weights[i] = (static_cast<double>(allocation[i]) / posterior_vars[i]) /
                 denom;
  }
  return weights;
}

double estimator_variance(const std::vector<double>& weights,
                          const std::vector<double>& posterior_vars,
                          const std::vector<std::int64_t>& allocation) {
  if (weights.size() != posterior_vars.size() ||
      weights.size() != allocation.size() || weights.empty()) {
    throw std::invalid_argument(
        "estimator_variance: need matching, non-empty inputs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) {
      throw std::invalid_argument("estimator_variance: negative weight");
    }
    if (weights[i] == 0.0) continue;
    if (allocation[i] <= 0) {
      throw std::domain_error(
          "estimator_variance: positive weight on a seller with no data");
    }
    total += weights[i] * weights[i] * posterior_vars[i] /
             static_cast<double>(allocation[i]);
  }
  return total;
}

double myerson_payment_expost(const BeliefState& winner_belief,
                              double winner_cost, double rival_score,
                              const MarketParams& params) {
  const CostModel& model = *params.cost_model;
  const double var = winner_belief.posterior_mean_var;
  if (!(var > 0.0)) {
    throw std::invalid_argument(
        "myerson_payment_expost: posterior mean variance must be positive");
  }
  const double psi_c = model.virtual_cost(winner_cost);
  const double score = var * psi_c;
  if (score > rival_score * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "myerson_payment_expost: seller does not win at this cost");
  }
  // Highest report that still wins.
  double tau = model.max_cost();
  if (std::isfinite(rival_score)) {
    const double psi_tau = rival_score / var;
    if (psi_tau < model.virtual_cost(model.max_cost())) {
      tau = std::max(winner_cost, model.inverse_virtual_cost(psi_tau));
    }
  }
  const double sigma_bar = std::sqrt(var);
  const double quantity =
      std::floor(relaxed_allocation(var, psi_c, params.lambda));
  return winner_cost * quantity +
         floored_tail_integral(model, sigma_bar, params.lambda, winner_cost,
                               tau);
}

double information_rent(const CostModel& model, double cost,
                        std::int64_t allocation) {
  if (allocation < 0) {
    throw std::invalid_argument("information_rent: negative allocation");
  }
  return static_cast<double>(allocation) * model.rent_per_unit(cost);
}

MechanismOutcome run_mechanism(const std::vector<BeliefState>& beliefs,
                               const std::vector<double>& costs,
                               const MarketParams& params,
                               std::mt19937_64& gen) {
  if (beliefs.empty() || beliefs.size() != costs.size()) {
    throw std::invalid_argument(
        "run_mechanism: need matching, non-empty beliefs and costs");
  }
  const CostModel& model = *params.cost_model;
  const std::size_t n = beliefs.size();

  MechanismOutcome out;
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.scores[i] = seller_score(beliefs[i], costs[i], model);
  }
  out.winner = argmin_with_ties(out.scores, gen);
  out.allocation.assign(n, 0);
  out.payments.assign(n, 0.0);
  out.rents.assign(n, 0.0);
  out.weights.assign(n, 0.0);

  const std::size_t w = out.winner;
  const double var_w = beliefs[w].posterior_mean_var;
  const double psi_w = model.virtual_cost(costs[w]);
  out.relaxed_allocation = relaxed_allocation(var_w, psi_w, params.lambda);
  const auto quantity =
      static_cast<std::int64_t>(std::floor(out.relaxed_allocation));
  if (quantity == 0) {
    out.no_trade = true;
    return out;
  }

  double rival_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (i != w) rival_score = std::min(rival_score, out.scores[i]);
  }

  out.allocation[w] = quantity;
  out.payments[w] =
      myerson_payment_expost(beliefs[w], costs[w], rival_score, params);
  out.rents[w] = information_rent(model, costs[w], quantity);

  std::vector<double> posterior_vars(n);
  for (std::size_t i = 0; i < n; ++i) {
    posterior_vars[i] = beliefs[i].posterior_mean_var;
  }
  out.weights = optimal_weights(out.allocation, posterior_vars);
  const double est_var =
      estimator_variance(out.weights, posterior_vars, out.allocation);
  out.buyer_utility = -est_var - params.lambda * out.payments[w];
  return out;
}

}  // namespace datamarket
