#include "datamarket/equilibrium.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

constexpr std::uint64_t kTagCell = 0xCE11u;
constexpr std::uint64_t kTagTable = 0x7AB1Eu;

constexpr double kEquilibriumSes = 2.0;

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

// Every cell's randomness is keyed by what defines the cell, so detection
// gives the same numbers whether reached directly or through a sweep.
std::uint64_t cell_key(const MarketParams& params, std::uint64_t seed) {
  return rng::derive_key(
      seed, {kTagCell, static_cast<std::uint64_t>(params.num_sellers),
             bits(params.sigma_low), bits(params.sigma_high)});
}

double margin_of(const DeviationTable& table) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& e : table.entries) {
    if (e.strategy == table.base_strategy) continue;
    double z;
    if (e.diff_se > 0.0) {
      z = e.diff_mean / e.diff_se;
    } else if (e.diff_mean > 0.0) {
      z = std::numeric_limits<double>::infinity();
    } else if (e.diff_mean < 0.0) {
      z = -std::numeric_limits<double>::infinity();
    } else {
      z = 0.0;
    }
    margin = std::min(margin, z);
  }
  return margin;
}

}  // namespace

std::string_view region_name(Region region) {
  switch (region) {
    case Region::InformativeOnly: return "informative_only";
    case Region::UninformativeOnly: return "uninformative_only";
    case Region::IntermediateOnly: return "intermediate_only";
    case Region::Multiple: return "multiple";
    case Region::NoneDetected: return "none_detected";
  }
  throw std::logic_error("region_name: unknown region");
}

std::vector<EquilibriumVerdict> detect_equilibria(const MarketParams& params,
                                                  std::int64_t n_rounds,
                                                  std::uint64_t seed,
                                                  bool use_crn, int workers) {
  validate_params(params);
  const std::uint64_t cell = cell_key(params, seed);
  std::vector<EquilibriumVerdict> verdicts;
  for (int m_star : legal_strategy_set(params.max_free_samples)) {
    const std::uint64_t table_seed = rng::derive_key(
        cell, {kTagTable, static_cast<std::uint64_t>(m_star)});
    EquilibriumVerdict v;
    v.strategy = m_star;
    v.table =
        deviation_table(params, m_star, n_rounds, table_seed, use_crn,
                        workers);
    v.margin = margin_of(v.table);
    v.is_equilibrium = v.margin >= kEquilibriumSes;
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

Region classify_region(const std::vector<int>& equilibria,
                       int max_free_samples) {
  if (equilibria.empty()) return Region::NoneDetected;
  if (equilibria.size() >= 2) return Region::Multiple;
  const int m = equilibria.front();
  if (m == max_free_samples) return Region::InformativeOnly;
  if (m == 0) return Region::UninformativeOnly;
  return Region::IntermediateOnly;
}

std::vector<CellResult> sweep_phase_diagram(const MarketParams& base,
                                            const SweepGrid& grid,
                                            std::int64_t n_rounds,
                                            std::uint64_t seed, bool use_crn,
                                            int workers,
                                            const SweepProgress& progress) {
  if (grid.seller_counts.empty() || grid.ratios.empty()) {
    throw std::invalid_argument("sweep_phase_diagram: empty grid");
  }
  for (double r : grid.ratios) {
    if (!(r > 1.0)) {
      throw std::invalid_argument(
          "sweep_phase_diagram: ratios must exceed 1");
    }
  }
  std::vector<CellResult> cells;
  cells.reserve(grid.seller_counts.size() * grid.ratios.size());
  const std::size_t total = grid.seller_counts.size() * grid.ratios.size();
  for (int k : grid.seller_counts) {
    for (double ratio : grid.ratios) {
      MarketParams params = base;
      params.num_sellers = k;
      params.sigma_low = base.sigma_high / ratio;
      CellResult cell;
      cell.num_sellers = k;
      cell.ratio = ratio;
      cell.verdicts = detect_equilibria(params, n_rounds, seed, use_crn,
                                        workers);
      for (const auto& v : cell.verdicts) {
        if (v.is_equilibrium) cell.equilibria.push_back(v.strategy);
      }
      cell.region = classify_region(cell.equilibria, params.max_free_samples);
      cells.push_back(std::move(cell));
      if (progress) progress(cells.back(), cells.size(), total);
    }
  }
  return cells;
}

TheoryBoundReport theory_bound_report(const MarketParams& params,
                                      double delta_low, double delta_high) {
  const ParamReport report = validate_params(params);
  TheoryBoundReport out;
  out.delta_low = delta_low;
  out.delta_high = delta_high;
  out.prior_mean_var = prior_belief(params).posterior_mean_var;
  out.floor_allocation_bound = report.floor_allocation_bound;
  out.approx_condition_slack = report.approx_condition_slack;
  out.approx_condition_holds = report.approx_condition_holds;
  if (report.floor_allocation_bound > 1.0) {
    out.rounding_loss_multiplicative =
        1.0 / (report.floor_allocation_bound - 1.0);
    out.rounding_utility_retention = 1.0 - out.rounding_loss_multiplicative;
  } else {
    out.rounding_loss_multiplicative =
        std::numeric_limits<double>::infinity();
    out.rounding_utility_retention = -std::numeric_limits<double>::infinity();
  }

  for (int m = 2; m <= params.max_free_samples; ++m) {
    TheoryBoundEntry entry;
    entry.samples = m;
    entry.mean_var_floor = posterior_mean_lower_bound(params, m);
    const BeliefShiftThresholds th =
        belief_shift_thresholds(params, m, delta_low, delta_high);
    entry.t_plus = th.t_plus;
    entry.z_plus = th.z_plus;
    entry.t_minus = th.t_minus;
    entry.z_minus = th.z_minus;
    const boost::math::chi_squared dist(static_cast<double>(m - 1));
    entry.prob_low_shift =
        th.z_plus > 0.0 ? boost::math::cdf(dist, th.z_plus) : 0.0;
    entry.prob_high_shift =
        th.z_minus > 0.0 ? 1.0 - boost::math::cdf(dist, th.z_minus) : 1.0;
    out.entries.push_back(entry);
  }
  return out;
}

}  // namespace datamarket
