#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "datamarket/equilibrium.hpp"
#include "datamarket/simulator.hpp"

// CSV and JSON serialization of results.
//
// Output files are reproducibility artifacts: numbers are rendered with
// std::to_chars (shortest round-trip form, locale-independent), every file
// starts with a schema-version header, and every file names the run manifest
// that produced it. Identical results therefore serialize to identical bytes.

namespace datamarket {

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

// Common "# schema: ... / # manifest: ... / # version: ..." preamble.
void write_csv_preamble(std::ostream& out, std::string_view schema,
                        std::string_view manifest_ref);

// Long-format deviation rows: one per (base strategy, deviation strategy).
void write_deviation_header(std::ostream& out, std::string_view manifest_ref);
void append_deviation_rows(std::ostream& out, int num_sellers, double ratio,
                           const DeviationTable& table);

// Equilibrium verdicts: one row per candidate symmetric strategy.
void write_detect_header(std::ostream& out, std::string_view manifest_ref);
void append_detect_rows(std::ostream& out, int num_sellers, double ratio,
                        const std::vector<EquilibriumVerdict>& verdicts,
                        std::int64_t n_rounds, std::uint64_t seed);

// Phase-diagram cells: one row per (num_sellers, ratio) with the detected
// equilibria, region label, and margins of every candidate strategy.
void write_phase_header(std::ostream& out, int max_free_samples,
                        std::string_view manifest_ref);
void append_phase_row(std::ostream& out, const CellResult& cell,
                      int max_free_samples, std::int64_t n_rounds,
                      std::uint64_t seed);

// Full single-round dump (sellers, beliefs, mechanism outcome) as JSON.
std::string round_to_json(const RoundResult& round,
                          const MarketParams& params);

}  // namespace datamarket
