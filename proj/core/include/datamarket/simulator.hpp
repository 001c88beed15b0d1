#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "datamarket/mechanism.hpp"

// Monte Carlo layer: full single-round simulation and batched estimation of
// seller profits under strategy profiles and unilateral deviations.
//
// Determinism contract: every estimate is computed in fixed-size blocks of
// rounds, each block drawing from its own derived RNG stream, and block
// partial sums are folded in block order. The worker count only changes which
// thread runs which block, so results are byte-identical for any `workers`.

namespace datamarket {

struct RoundResult {
  std::vector<SellerRealization> sellers;
  std::vector<BeliefState> beliefs;
  MechanismOutcome outcome;
};

// Draws every seller's type, cost and (where committed) sample variance,
// updates beliefs, and runs the mechanism once.
RoundResult simulate_round(const MarketParams& params,
                           const StrategyProfile& profile,
                           std::mt19937_64& gen);

struct UtilityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_rounds = 0;
  std::int64_t no_trade_count = 0;
};

// Monte Carlo estimate of one seller's expected per-round profit
// (information rent when winning, zero otherwise) under a fixed profile.
UtilityEstimate estimate_seller_utility(const MarketParams& params,
                                        const StrategyProfile& profile,
                                        std::size_t seller_index,
                                        std::int64_t n_rounds,
                                        std::uint64_t seed, int workers = 1);

struct DeviationEntry {
  int strategy = 0;  // the deviation m' this row evaluates
  UtilityEstimate estimate;
  // base-profile mean minus deviation mean, and its standard error. Positive
  // diff_mean means the deviation hurts. Under common random numbers the SE
  // is the paired-difference SE; otherwise the unpaired combination.
  double diff_mean = 0.0;
  double diff_se = 0.0;
};

// Profit of seller 0 at the symmetric base profile (everyone plays
// base_strategy) and at every unilateral deviation m' in the legal set,
// including m' = base_strategy itself (whose diff row is identically zero
// under common random numbers).
struct DeviationTable {
  int base_strategy = 0;
  bool used_crn = true;
  std::int64_t n_rounds = 0;
  std::vector<DeviationEntry> entries;  // ascending by strategy

  const DeviationEntry& entry(int strategy) const;
};

// Builds the deviation table. With use_crn, all deviation columns of a round
// share the same rival draws and the same deviator type/cost, and the
// deviator's signal is recomputed per column from one shared underlying
// uniform (inverse-CDF coupling: every column sees an equally lucky signal,
// with the exact marginal law for its own sample count). This cancels most of
// the noise in the profit differences while leaving each column's mean
// estimate unbiased.
DeviationTable deviation_table(const MarketParams& params, int base_strategy,
                               std::int64_t n_rounds, std::uint64_t seed,
                               bool use_crn = true, int workers = 1);

}  // namespace datamarket
