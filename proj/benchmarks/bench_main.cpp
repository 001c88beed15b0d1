// Microbenchmarks for the hot paths: belief updates, the per-round
// mechanism, ex-post payments, whole simulated rounds, and the paired
// deviation-table estimator that dominates sweep runtime.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "datamarket/belief.hpp"
#include "datamarket/market.hpp"
#include "datamarket/mechanism.hpp"
#include "datamarket/rng.hpp"
#include "datamarket/simulator.hpp"

namespace {

using namespace datamarket;

MarketParams make_params(double ratio, int num_sellers) {
  MarketParams params;
  params.sigma_high = 50.0;
  params.sigma_low = 50.0 / ratio;
  params.mu = 0.6;
  params.lambda = 0.007;
  params.num_sellers = num_sellers;
  params.max_free_samples = 5;
  params.cost_model = std::make_shared<UniformCostModel>(0.5, 2.0);
  return params;
}

void BM_posterior_update(benchmark::State& state) {
  const MarketParams params = make_params(2.0, 5);
  const int m = static_cast<int>(state.range(0));
  auto gen = rng::make_stream(1, {0xBE7CULL});
  // A fixed bag of plausible sample variances so the benchmark measures the
  // update, not the RNG.
  std::vector<double> draws;
  std::chi_squared_distribution<double> chi2(m - 1);
  for (int i = 0; i < 1024; ++i) {
    draws.push_back(params.low_var() * chi2(gen) / (m - 1));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const BeliefState belief =
        posterior_from_sample_variance(params, m, draws[i & 1023]);
    benchmark::DoNotOptimize(belief.posterior_mean_var);
    ++i;
  }
}

void BM_run_mechanism(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const MarketParams params = make_params(2.0, k);
  auto gen = rng::make_stream(2, {0xABCDULL});
  std::vector<BeliefState> beliefs;
  std::vector<double> costs;
  std::chi_squared_distribution<double> chi2(4);
  std::uniform_real_distribution<double> cost_dist(0.5, 2.0);
  for (int i = 0; i < k; ++i) {
    const double s2 = params.low_var() * chi2(gen) / 4.0;
    beliefs.push_back(posterior_from_sample_variance(params, 5, s2));
    costs.push_back(cost_dist(gen));
  }
  for (auto _ : state) {
    const MechanismOutcome outcome = run_mechanism(beliefs, costs, params, gen);
    benchmark::DoNotOptimize(outcome.payments);
  }
}

void BM_myerson_payment(benchmark::State& state) {
  const MarketParams params = make_params(2.0, 5);
  auto gen = rng::make_stream(3, {0x9999ULL});
  std::chi_squared_distribution<double> chi2(4);
  const double s2 = params.low_var() * chi2(gen) / 4.0;
  const BeliefState winner = posterior_from_sample_variance(params, 5, s2);
  // Rival score high enough that the winner wins at any cost in range.
  const double rival_score =
      winner.posterior_mean_var * params.cost_model->virtual_cost(2.0) * 1.01;
  double cost = 0.5;
  for (auto _ : state) {
    const double t = myerson_payment_expost(winner, cost, rival_score, params);
    benchmark::DoNotOptimize(t);
    cost += 0.0001;
    if (cost > 1.9) cost = 0.5;
  }
}

void BM_simulate_round(benchmark::State& state) {
  const MarketParams params = make_params(2.0, 5);
  const auto profile = StrategyProfile::symmetric(5, 5, 5);
  auto gen = rng::make_stream(4, {0x5151ULL});
  for (auto _ : state) {
    const RoundResult round = simulate_round(params, profile, gen);
    benchmark::DoNotOptimize(round.outcome.payments);
  }
}

// One deviation table at the hardest kind of cell (high ratio, many
// sellers): this is the unit of work a phase-diagram sweep repeats per
// (K, ratio, m*) triple.
void BM_deviation_table(benchmark::State& state) {
  const MarketParams params = make_params(200.0, 10);
  const int workers = static_cast<int>(state.range(0));
  const std::int64_t rounds = 16384;  // four scheduling blocks, so workers matter
  for (auto _ : state) {
    const DeviationTable table =
        deviation_table(params, 5, rounds, 42, true, workers);
    benchmark::DoNotOptimize(table.entries.front().diff_mean);
  }
  state.SetItemsProcessed(state.iterations() * rounds);
}

BENCHMARK(BM_posterior_update)->Arg(2)->Arg(5);
BENCHMARK(BM_run_mechanism)->Arg(2)->Arg(5)->Arg(10);
BENCHMARK(BM_myerson_payment);
BENCHMARK(BM_simulate_round);
BENCHMARK(BM_deviation_table)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
