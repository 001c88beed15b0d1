#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "datamarket/belief.hpp"
#include "datamarket/market.hpp"

// The buyer's procurement mechanism.
//
// Sellers are scored by posterior mean variance times virtual cost; the
// lowest score wins. The winner supplies the floor of the relaxed allocation
// n* = sigma_bar / sqrt(lambda * psi(c)) and is paid the ex-post
// incentive-compatible transfer: cost times quantity plus the integral of the
// (floored) allocation over the cost range the seller could have reported and
// still won. Payments therefore depend on the runner-up score, which caps how
// high a winning report can go.

namespace datamarket {

struct MechanismOutcome {
  std::size_t winner = 0;  // recorded even when no trade happens
  bool no_trade = false;   // floored allocation of the winner was zero
  double relaxed_allocation = 0.0;  // winner's n* before flooring
  std::vector<double> scores;       // posterior mean var * virtual cost
  std::vector<std::int64_t> allocation;
  std::vector<double> payments;
  std::vector<double> rents;    // information rent component of each payment
  std::vector<double> weights;  // buyer's estimator weights (all zero if no trade)
  double buyer_utility = 0.0;   // -(estimator variance) - lambda * payments
};

// Score used for winner selection.
inline double seller_score(const BeliefState& belief, double cost,
                           const CostModel& model) {
  return belief.posterior_mean_var * model.virtual_cost(cost);
}

// Index of the lowest-scoring seller; exact ties are broken uniformly at
// random (a measure-zero event for continuous costs).
std::size_t select_winner(const std::vector<BeliefState>& beliefs,
                          const std::vector<double>& costs,
                          const MarketParams& params, std::mt19937_64& gen);

// Unfloored optimal quantity sigma_bar / sqrt(lambda * psi(c)).
double relaxed_allocation(double posterior_mean_var, double virtual_cost,
                          double lambda);

// Precision-weighted estimator weights w_i proportional to n_i / sigma_i^2.
// Throws if every allocation is zero.
std::vector<double> optimal_weights(
    const std::vector<std::int64_t>& allocation,
    const std::vector<double>& posterior_vars);

// Variance of the weighted estimator: sum of w_i^2 sigma_i^2 / n_i over
// sellers with positive weight. Throws if a positive weight sits on a seller
// with no data.
double estimator_variance(const std::vector<double>& weights,
                          const std::vector<double>& posterior_vars,
                          const std::vector<std::int64_t>& allocation);

// Ex-post transfer to a winner with the given belief and cost when the best
// rival score is rival_score (+infinity if there is no rival):
//
//   t(c) = c * floor(n(c)) + integral_c^tau floor(n(s)) ds,
//
// where n(s) is the relaxed allocation at reported cost s and tau is the
// highest report that still wins. Requires that the winner actually wins at
// its cost, i.e. posterior_mean_var * psi(cost) <= rival_score.
double myerson_payment_expost(const BeliefState& winner_belief,
                              double winner_cost, double rival_score,
                              const MarketParams& params);

// Information-rent component of the payment: allocation * F(c)/f(c). Equals
// the payment minus both the cost reimbursement and the flooring kinks'
// contribution in expectation; used by the fast simulation path, which needs
// seller profit but not the full transfer.
double information_rent(const CostModel& model, double cost,
                        std::int64_t allocation);

// Full mechanism for one round: scoring, winner selection, allocation,
// payment, weights, buyer utility. gen is consumed only to break score ties.
MechanismOutcome run_mechanism(const std::vector<BeliefState>& beliefs,
                               const std::vector<double>& costs,
                               const MarketParams& params,
                               std::mt19937_64& gen);

}  // namespace datamarket
