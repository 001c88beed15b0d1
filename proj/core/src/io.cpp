#include "datamarket/io.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "datamarket/version.hpp"

namespace datamarket {

std::string format_double(double v) {
  std::array<char, 40> buf;
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (result.ec != std::errc()) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf.data(), result.ptr);
}

void write_csv_preamble(std::ostream& out, std::string_view schema,
                        std::string_view manifest_ref) {
  out << "# schema: " << schema << "\n";
  out << "# manifest: " << manifest_ref << "\n";
  out << "# version: " << kVersion << "\n";
}

void write_deviation_header(std::ostream& out,
                            std::string_view manifest_ref) {
  write_csv_preamble(out, "deviation_table.v1", manifest_ref);
  out << "K,ratio,m_star,m_dev,mean,se,n_rounds,no_trade\n";
}

void append_deviation_rows(std::ostream& out, int num_sellers, double ratio,
                           const DeviationTable& table) {
  for (const auto& e : table.entries) {
    out << num_sellers << ',' << format_double(ratio) << ','
        << table.base_strategy << ',' << e.strategy << ','
        << format_double(e.estimate.mean) << ','
        << format_double(e.estimate.std_error) << ','
        << e.estimate.n_rounds << ',' << e.estimate.no_trade_count << "\n";
  }
}

void write_detect_header(std::ostream& out, std::string_view manifest_ref) {
  write_csv_preamble(out, "equilibrium_verdicts.v1", manifest_ref);
  out << "K,ratio,m_star,is_equilibrium,margin,n_rounds,seed\n";
}

void append_detect_rows(std::ostream& out, int num_sellers, double ratio,
                        const std::vector<EquilibriumVerdict>& verdicts,
                        std::int64_t n_rounds, std::uint64_t seed) {
  for (const auto& v : verdicts) {
    out << num_sellers << ',' << format_double(ratio) << ',' << v.strategy
        << ',' << (v.is_equilibrium ? 1 : 0) << ','
        << format_double(v.margin) << ',' << n_rounds << ',' << seed << "\n";
  }
}

void write_phase_header(std::ostream& out, int max_free_samples,
                        std::string_view manifest_ref) {
  write_csv_preamble(out, "phase_diagram.v1", manifest_ref);
  out << "K,ratio,region,equilibria";
  for (int m : legal_strategy_set(max_free_samples)) {
    out << ",margin_m" << m;
  }
  out << ",n_rounds,seed\n";
}

void append_phase_row(std::ostream& out, const CellResult& cell,
                      int max_free_samples, std::int64_t n_rounds,
                      std::uint64_t seed) {
  out << cell.num_sellers << ',' << format_double(cell.ratio) << ','
      << region_name(cell.region) << ',';
  for (std::size_t i = 0; i < cell.equilibria.size(); ++i) {
    if (i) out << '|';
    out << cell.equilibria[i];
  }
  const std::vector<int> legal = legal_strategy_set(max_free_samples);
  if (cell.verdicts.size() != legal.size()) {
    throw std::invalid_argument(
        "append_phase_row: verdicts do not match the legal strategy set");
  }
  for (const auto& v : cell.verdicts) {
    out << ',' << format_double(v.margin);
  }
  out << ',' << n_rounds << ',' << seed << "\n";
}

std::string round_to_json(const RoundResult& round,
                          const MarketParams& params) {
  nlohmann::json j;
  j["num_sellers"] = params.num_sellers;
  j["ratio"] = params.ratio();
  j["sellers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < round.sellers.size(); ++i) {
    const SellerRealization& s = round.sellers[i];
    nlohmann::json seller;
    seller["index"] = i;
    seller["type"] = s.type == VarianceType::Low ? "low" : "high";
    seller["cost"] = s.cost;
    seller["free_samples"] = s.free_samples;
    if (s.sample_variance) {
      seller["sample_variance"] = *s.sample_variance;
    } else {
      seller["sample_variance"] = nullptr;
    }
    seller["pi_high"] = round.beliefs[i].pi_high;
    seller["posterior_mean_var"] = round.beliefs[i].posterior_mean_var;
    seller["score"] = round.outcome.scores[i];
    seller["allocation"] = round.outcome.allocation[i];
    seller["payment"] = round.outcome.payments[i];
    seller["rent"] = round.outcome.rents[i];
    seller["weight"] = round.outcome.weights[i];
    j["sellers"].push_back(std::move(seller));
  }
  j["winner"] = round.outcome.winner;
  j["no_trade"] = round.outcome.no_trade;
  j["relaxed_allocation"] = round.outcome.relaxed_allocation;
  j["buyer_utility"] = round.outcome.buyer_utility;
  return j.dump(2);
}

}  // namespace datamarket
