#include "datamarket/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

// Rounds per RNG block. Small enough for good load balance, large enough
// that per-block stream setup is negligible.
constexpr std::int64_t kBlockSize = 4096;

// Stream purposes folded into derived keys (arbitrary distinct constants).
constexpr std::uint64_t kTagEstimate = 0xE57u;
constexpr std::uint64_t kTagCommon = 0xC0u;
constexpr std::uint64_t kTagSignal = 0x516u;

std::int64_t block_count(std::int64_t n_rounds) {
  return (n_rounds + kBlockSize - 1) / kBlockSize;
}

// Runs fn(block_index, first_round, last_round) for every block, spreading
// blocks across `workers` threads. fn must only touch per-block state; the
// caller folds the per-block results in block order afterwards.
template <typename Fn>
void for_each_block(std::int64_t n_rounds, int workers, const Fn& fn) {
  const std::int64_t blocks = block_count(n_rounds);
  const int nthreads = static_cast<int>(
      std::min<std::int64_t>(std::max(workers, 1), blocks));
  auto run_strided = [&](int offset) {
    for (std::int64_t b = offset; b < blocks; b += nthreads) {
      const std::int64_t first = b * kBlockSize;
      const std::int64_t last = std::min(first + kBlockSize, n_rounds);
      fn(b, first, last);
    }
  };
  if (nthreads == 1) {
    run_strided(0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        run_strided(t);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Running sums for one profit series.
struct SeriesAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t no_trade = 0;

  void add(double u, bool no_trade_round) {
    sum += u;
    sum_sq += u * u;
    no_trade += no_trade_round ? 1 : 0;
  }
  void fold(const SeriesAcc& other) {
    sum += other.sum;
    sum_sq += other.sum_sq;
    no_trade += other.no_trade;
  }
};

UtilityEstimate finalize(const SeriesAcc& acc, std::int64_t n) {
  UtilityEstimate est;
  est.n_rounds = n;
  est.no_trade_count = acc.no_trade;
  est.mean = acc.sum / static_cast<double>(n);
  if (n > 1) {
    const double nn = static_cast<double>(n);
    const double var =
        std::max(0.0, (acc.sum_sq - nn * est.mean * est.mean) / (nn - 1.0));
    est.std_error = std::sqrt(var / nn);
  }
  return est;
}

VarianceType draw_type(const MarketParams& params, std::mt19937_64& gen) {
  return rng::bernoulli(gen, params.mu) ? VarianceType::Low
                                        : VarianceType::High;
}

// Floored quantity the mechanism buys from a winner with this posterior mean
// variance and virtual cost.
std::int64_t floored_quantity(const MarketParams& params, double mean_var,
                              double psi) {
  return static_cast<std::int64_t>(
      std::floor(std::sqrt(mean_var / (params.lambda * psi))));
}

// Fundamentals shared across deviation columns of one round: the deviator's
// type and cost plus the best rival's score and floored allocation. Under
// common random numbers the deviator's signal is driven by one shared
// uniform, so every column sees an equally lucky draw.
struct RoundFundamentals {
  VarianceType deviator_type = VarianceType::Low;
  double deviator_cost = 0.0;
  double deviator_psi = 0.0;
  double rival_score = std::numeric_limits<double>::infinity();
  std::int64_t rival_quantity = 0;
  double signal_quantile = 0.0;  // meaningful only under CRN
};

// Sample variance of m observations at the given quantile of its law:
// (m-1) S^2 / sigma^2 is chi-squared with m-1 degrees of freedom. Evaluating
// different m at one common quantile makes the columns comonotone while
// keeping every column's marginal distribution exact.
double sample_variance_at_quantile(const MarketParams& params,
                                   VarianceType type, int m, double u) {
  const boost::math::chi_squared_distribution<double> dist(
      static_cast<double>(m - 1));
  return params.variance_of(type) * boost::math::quantile(dist, u) /
         static_cast<double>(m - 1);
}

RoundFundamentals draw_fundamentals(const MarketParams& params,
                                    int rival_strategy, bool with_quantile,
                                    std::mt19937_64& gen) {
  const CostModel& model = *params.cost_model;
  RoundFundamentals f;
  f.deviator_type = draw_type(params, gen);
  f.deviator_cost = model.sample_cost(gen);
  f.deviator_psi = model.virtual_cost(f.deviator_cost);

  const BeliefState prior = prior_belief(params);
  double best_mean_var = 0.0;
  double best_psi = 0.0;
  for (int i = 1; i < params.num_sellers; ++i) {
    const VarianceType type = draw_type(params, gen);
    const double cost = model.sample_cost(gen);
    const double psi = model.virtual_cost(cost);
    double mean_var = prior.posterior_mean_var;
    if (rival_strategy >= 2) {
      const double s2 =
          draw_sample_variance(params, type, rival_strategy, gen);
      mean_var =
          posterior_from_sample_variance(params, rival_strategy, s2)
              .posterior_mean_var;
    }
    const double score = mean_var * psi;
    if (score < f.rival_score) {
      f.rival_score = score;
      best_mean_var = mean_var;
      best_psi = psi;
    }
  }
  if (params.num_sellers > 1) {
    f.rival_quantity = floored_quantity(params, best_mean_var, best_psi);
  }
  if (with_quantile) f.signal_quantile = rng::uniform01(gen);
  return f;
}

// Deviator profit in one round when playing `m` against the fundamentals.
// Returns the profit and whether the round ended with no trade.
struct ColumnOutcome {
  double profit = 0.0;
  bool no_trade = false;
};

ColumnOutcome evaluate_column(const MarketParams& params,
                              const RoundFundamentals& f, int m, bool use_crn,
                              const BeliefState& prior,
                              std::mt19937_64& signal_gen) {
  BeliefState belief = prior;
  if (m >= 2) {
    const double s2 =
        use_crn ? sample_variance_at_quantile(params, f.deviator_type, m,
                                              f.signal_quantile)
                : draw_sample_variance(params, f.deviator_type, m, signal_gen);
    belief = posterior_from_sample_variance(params, m, s2);
  }
  const double score = belief.posterior_mean_var * f.deviator_psi;

  bool deviator_wins;
  if (score < f.rival_score) {
    deviator_wins = true;
  } else if (score > f.rival_score) {
    deviator_wins = false;
  } else {
    // Exact score tie: a coin flip from the column's own stream, never from
    // the shared stream, so common draws stay aligned across columns.
    deviator_wins = rng::uniform01(signal_gen) < 0.5;
  }

  ColumnOutcome out;
  if (deviator_wins) {
    const std::int64_t q = floored_quantity(
        params, belief.posterior_mean_var, f.deviator_psi);
    out.no_trade = q == 0;
    out.profit = information_rent(*params.cost_model, f.deviator_cost, q);
  } else {
    out.no_trade = f.rival_quantity == 0;
  }
  return out;
}

}  // namespace

RoundResult simulate_round(const MarketParams& params,
                           const StrategyProfile& profile,
                           std::mt19937_64& gen) {
  if (profile.num_sellers() != static_cast<std::size_t>(params.num_sellers)) {
    throw std::invalid_argument(
        "simulate_round: profile size does not match num_sellers");
  }
  RoundResult result;
  const auto n = profile.num_sellers();
  result.sellers.reserve(n);
  result.beliefs.reserve(n);
  std::vector<double> costs(n);
  for (std::size_t i = 0; i < n; ++i) {
    SellerRealization seller;
    seller.type = draw_type(params, gen);
    seller.cost = params.cost_model->sample_cost(gen);
    seller.free_samples = profile[i];
    if (seller.free_samples >= 2) {
      seller.sample_variance =
          draw_sample_variance(params, seller.type, seller.free_samples, gen);
    }
    costs[i] = seller.cost;
    result.beliefs.push_back(posterior_from_sample_variance(
        params, seller.free_samples, seller.sample_variance));
    result.sellers.push_back(std::move(seller));
  }
  result.outcome = run_mechanism(result.beliefs, costs, params, gen);
  return result;
}

UtilityEstimate estimate_seller_utility(const MarketParams& params,
                                        const StrategyProfile& profile,
                                        std::size_t seller_index,
                                        std::int64_t n_rounds,
                                        std::uint64_t seed, int workers) {
  if (profile.num_sellers() != static_cast<std::size_t>(params.num_sellers)) {
    throw std::invalid_argument(
        "estimate_seller_utility: profile size does not match num_sellers");
  }
  if (seller_index >= profile.num_sellers()) {
    throw std::out_of_range("estimate_seller_utility: seller index");
  }
  if (n_rounds < 1) {
    throw std::invalid_argument(
        "estimate_seller_utility: need at least one round");
  }
  const CostModel& model = *params.cost_model;
  const BeliefState prior = prior_belief(params);
  const auto n_sellers = profile.num_sellers();

  std::vector<SeriesAcc> partials(
      static_cast<std::size_t>(block_count(n_rounds)));
  for_each_block(
      n_rounds, workers,
      [&](std::int64_t block, std::int64_t first, std::int64_t last) {
        auto gen = rng::make_stream(
            seed, {kTagEstimate, static_cast<std::uint64_t>(block)});
        SeriesAcc acc;
        std::vector<double> scores(n_sellers);
        std::vector<double> mean_vars(n_sellers);
        std::vector<double> psis(n_sellers);
        std::vector<double> costs(n_sellers);
        for (std::int64_t r = first; r < last; ++r) {
          for (std::size_t i = 0; i < n_sellers; ++i) {
            const VarianceType type = draw_type(params, gen);
            costs[i] = model.sample_cost(gen);
            const int m = profile[i];
            double mean_var = prior.posterior_mean_var;
            if (m >= 2) {
              const double s2 = draw_sample_variance(params, type, m, gen);
              mean_var = posterior_from_sample_variance(params, m, s2)
                             .posterior_mean_var;
            }
            psis[i] = model.virtual_cost(costs[i]);
            mean_vars[i] = mean_var;
            scores[i] = mean_var * psis[i];
          }
          std::size_t best = 0;
          for (std::size_t i = 1; i < n_sellers; ++i) {
            if (scores[i] < scores[best]) best = i;
          }
          std::size_t tie_count = 0;
          for (double s : scores) tie_count += (s == scores[best]) ? 1 : 0;
          if (tie_count > 1) {
            auto pick = static_cast<std::size_t>(
                rng::uniform01(gen) * static_cast<double>(tie_count));
            pick = std::min(pick, tie_count - 1);
            for (std::size_t i = 0; i < n_sellers; ++i) {
              if (scores[i] == scores[best]) {
                if (pick == 0) {
                  best = i;
                  break;
                }
                --pick;
              }
            }
          }
          const std::int64_t q =
              floored_quantity(params, mean_vars[best], psis[best]);
          double profit = 0.0;
          if (best == seller_index && q > 0) {
            profit = information_rent(model, costs[best], q);
          }
          acc.add(profit, q == 0);
        }
        partials[static_cast<std::size_t>(block)] = acc;
      });

  SeriesAcc total;
  for (const auto& p : partials) total.fold(p);
  return finalize(total, n_rounds);
}

const DeviationEntry& DeviationTable::entry(int strategy) const {
  for (const auto& e : entries) {
    if (e.strategy == strategy) return e;
  }
  throw std::out_of_range("DeviationTable: no entry for that strategy");
}

DeviationTable deviation_table(const MarketParams& params, int base_strategy,
                               std::int64_t n_rounds, std::uint64_t seed,
                               bool use_crn, int workers) {
  const std::vector<int> legal = legal_strategy_set(params.max_free_samples);
  if (std::find(legal.begin(), legal.end(), base_strategy) == legal.end()) {
    throw std::invalid_argument(
        "deviation_table: base strategy is not in the legal set");
  }
  if (n_rounds < 1) {
    throw std::invalid_argument("deviation_table: need at least one round");
  }
  const std::size_t n_cols = legal.size();
  const std::size_t base_idx = static_cast<std::size_t>(
      std::find(legal.begin(), legal.end(), base_strategy) - legal.begin());
  const BeliefState prior = prior_belief(params);

  // Per-block accumulators: one profit series per column plus (under CRN)
  // paired base-minus-column difference sums.
  struct BlockAcc {
    std::vector<SeriesAcc> cols;
    std::vector<double> diff_sum;
    std::vector<double> diff_sum_sq;
  };
  std::vector<BlockAcc> partials(
      static_cast<std::size_t>(block_count(n_rounds)));

  for_each_block(
      n_rounds, workers,
      [&](std::int64_t block, std::int64_t first, std::int64_t last) {
        const auto b = static_cast<std::uint64_t>(block);
        BlockAcc acc;
        acc.cols.resize(n_cols);
        acc.diff_sum.assign(n_cols, 0.0);
        acc.diff_sum_sq.assign(n_cols, 0.0);

        // One shared fundamentals stream under CRN; one per column without.
        std::vector<std::mt19937_64> commons;
        if (use_crn) {
          commons.push_back(rng::make_stream(seed, {kTagCommon, b}));
        } else {
          for (int m : legal) {
            commons.push_back(rng::make_stream(
                seed, {kTagCommon, static_cast<std::uint64_t>(m), b}));
          }
        }
        std::vector<std::mt19937_64> signals;
        signals.reserve(n_cols);
        for (int m : legal) {
          signals.push_back(rng::make_stream(
              seed, {kTagSignal, static_cast<std::uint64_t>(m), b}));
        }

        std::vector<double> profits(n_cols);
        for (std::int64_t r = first; r < last; ++r) {
          RoundFundamentals shared;
          if (use_crn) {
            shared = draw_fundamentals(params, base_strategy, true, commons[0]);
          }
          for (std::size_t j = 0; j < n_cols; ++j) {
            if (!use_crn) {
              shared =
                  draw_fundamentals(params, base_strategy, false, commons[j]);
            }
            const ColumnOutcome col = evaluate_column(
                params, shared, legal[j], use_crn, prior, signals[j]);
            profits[j] = col.profit;
            acc.cols[j].add(col.profit, col.no_trade);
          }
          if (use_crn) {
            const double base = profits[base_idx];
            for (std::size_t j = 0; j < n_cols; ++j) {
              const double d = base - profits[j];
              acc.diff_sum[j] += d;
              acc.diff_sum_sq[j] += d * d;
            }
          }
        }
        partials[static_cast<std::size_t>(block)] = std::move(acc);
      });

  BlockAcc total;
  total.cols.resize(n_cols);
  total.diff_sum.assign(n_cols, 0.0);
  total.diff_sum_sq.assign(n_cols, 0.0);
  for (const auto& p : partials) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      total.cols[j].fold(p.cols[j]);
      total.diff_sum[j] += p.diff_sum[j];
      total.diff_sum_sq[j] += p.diff_sum_sq[j];
    }
  }

  DeviationTable table;
  table.base_strategy = base_strategy;
  table.used_crn = use_crn;
  table.n_rounds = n_rounds;
  table.entries.resize(n_cols);
  const double nn = static_cast<double>(n_rounds);
  for (std::size_t j = 0; j < n_cols; ++j) {
    DeviationEntry& e = table.entries[j];
    e.strategy = legal[j];
    e.estimate = finalize(total.cols[j], n_rounds);
    if (use_crn) {
      e.diff_mean = total.diff_sum[j] / nn;
      if (n_rounds > 1) {
        const double var = std::max(
            0.0, (total.diff_sum_sq[j] - nn * e.diff_mean * e.diff_mean) /
                     (nn - 1.0));
        e.diff_se = std::sqrt(var / nn);
      }
    }
  }
  if (!use_crn) {
    // Unpaired diffs need every column finalized first.
    const UtilityEstimate base = table.entries[base_idx].estimate;
    for (auto& e : table.entries) {
      e.diff_mean = base.mean - e.estimate.mean;
      e.diff_se = std::sqrt(base.std_error * base.std_error +
                            e.estimate.std_error * e.estimate.std_error);
    }
  }
  return table;
}

}  // namespace datamarket
