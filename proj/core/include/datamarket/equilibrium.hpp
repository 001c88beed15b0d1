#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "datamarket/simulator.hpp"

// Equilibrium detection and the phase diagram over (num_sellers, ratio).
//
// A symmetric profile "everyone plays m*" is declared an equilibrium when
// every unilateral deviation lowers the deviator's estimated profit by at
// least two combined standard errors. Detection at a grid cell derives all
// randomness from (master seed, num_sellers, sigma_low, sigma_high), so a
// single-cell sweep and a direct detection run produce identical numbers.

namespace datamarket {

enum class Region {
  InformativeOnly,    // only the maximal sample count survives
  UninformativeOnly,  // only zero samples survives
  IntermediateOnly,   // exactly one interior sample count survives
  Multiple,           // two or more equilibria detected
  NoneDetected,       // no symmetric pure equilibrium found
};

std::string_view region_name(Region region);

struct EquilibriumVerdict {
  int strategy = 0;          // candidate symmetric m*
  bool is_equilibrium = false;
  // Worst deviation gap in standard-error units:
  // min over m' != m* of diff_mean / diff_se. At least 2 for an equilibrium.
  double margin = 0.0;
  DeviationTable table;
};

// Tests every legal symmetric profile at the given configuration.
std::vector<EquilibriumVerdict> detect_equilibria(const MarketParams& params,
                                                  std::int64_t n_rounds,
                                                  std::uint64_t seed,
                                                  bool use_crn = true,
                                                  int workers = 1);

// Maps a detected equilibrium set to its phase-diagram region. Sets with two
// or more members are Multiple regardless of composition.
Region classify_region(const std::vector<int>& equilibria,
                       int max_free_samples);

struct SweepGrid {
  std::vector<int> seller_counts;
  std::vector<double> ratios;  // sigma_high / sigma_low
};

struct CellResult {
  int num_sellers = 0;
  double ratio = 0.0;
  std::vector<EquilibriumVerdict> verdicts;  // ascending by strategy
  std::vector<int> equilibria;               // strategies that survived
  Region region = Region::NoneDetected;
};

using SweepProgress =
    std::function<void(const CellResult& cell, std::size_t done,
                       std::size_t total)>;

// Runs detection on every (num_sellers, ratio) cell, row-major with
// seller counts outer and ratios inner. sigma_high is taken from `base`;
// each cell sets sigma_low = sigma_high / ratio. Cells are independent:
// the master seed reaches each cell unchanged.
std::vector<CellResult> sweep_phase_diagram(const MarketParams& base,
                                            const SweepGrid& grid,
                                            std::int64_t n_rounds,
                                            std::uint64_t seed,
                                            bool use_crn = true,
                                            int workers = 1,
                                            const SweepProgress& progress = {});

// Closed-form side of the analysis: how far m samples can move beliefs and
// how much the floored allocation can cost.
struct TheoryBoundEntry {
  int samples = 0;           // m
  double mean_var_floor = 0.0;  // infimum of posterior mean variance
  double t_plus = 0.0;       // likelihood-ratio cutoffs and chi-squared
  double z_plus = 0.0;       //   thresholds (see belief_shift_thresholds)
  double t_minus = 0.0;
  double z_minus = 0.0;
  // Pr[posterior low-belief rises by delta_low | low type] and
  // Pr[posterior low-belief falls by delta_high | high type].
  double prob_low_shift = 0.0;
  double prob_high_shift = 0.0;
};

struct TheoryBoundReport {
  double delta_low = 0.0;
  double delta_high = 0.0;
  double prior_mean_var = 0.0;
  // Worst-case relaxed allocation (see ParamReport) and the flooring-loss
  // bounds it implies: flooring costs at most a 1/(floor_bound - 1) fraction
  // of the ideal utility, i.e. retention >= 1 - 1/(floor_bound - 1).
  double floor_allocation_bound = 0.0;
  double rounding_loss_multiplicative = 0.0;
  double rounding_utility_retention = 0.0;
  double approx_condition_slack = 0.0;
  bool approx_condition_holds = false;
  std::vector<TheoryBoundEntry> entries;  // m = 2 .. max_free_samples
};

TheoryBoundReport theory_bound_report(const MarketParams& params,
                                      double delta_low, double delta_high);

}  // namespace datamarket
