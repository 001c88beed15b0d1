// market_sim: command-line front end for the data-market simulator.
//
// Subcommands:
//   round            simulate one full round, print it as JSON to stdout
//   deviation-table  estimate profits at a base strategy and all deviations
//   detect           test every symmetric strategy for equilibrium
//   sweep            build the phase diagram over (K, ratio) cells
//   rerun            re-execute a previous run from its manifest and verify
//                    that the data files come out byte-identical
//
// Every file-producing run writes its outputs first and a manifest.json last;
// the manifest embeds the full config snapshot and the effective parameters,
// which is what makes `rerun` possible. Progress goes to stderr; stdout is
// reserved for data (the round JSON).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "datamarket/config.hpp"
#include "datamarket/equilibrium.hpp"
#include "datamarket/io.hpp"
#include "datamarket/simulator.hpp"
#include "datamarket/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace datamarket;

namespace {

// Shared flags of the file-producing subcommands. CLI values override the
// config file's own seed / n_rounds.
struct CommonOptions {
  std::string config_path;
  fs::path out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::int64_t n_rounds = 0;
  bool n_rounds_set = false;
  int workers = 1;
  bool use_crn = true;
};

void add_common_options(CLI::App& cmd, CommonOptions& opts,
                        bool needs_out_dir) {
  cmd.add_option("--config", opts.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* seed = cmd.add_option("--seed", opts.seed,
                              "master seed (overrides the config)");
  auto* rounds =
      cmd.add_option("--n-rounds", opts.n_rounds,
                     "Monte Carlo rounds per estimate (overrides the config)")
          ->check(CLI::PositiveNumber);
  cmd.add_option("--workers", opts.workers,
                 "worker threads; results are identical for any value")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_flag("--crn,!--no-crn", opts.use_crn,
               "pair deviation columns on common random numbers");
  auto* out = cmd.add_option("--out", opts.out_dir, "output directory");
  if (needs_out_dir) out->required();
  cmd.callback([&opts, seed, rounds]() {
    opts.seed_set = seed->count() > 0;
    opts.n_rounds_set = rounds->count() > 0;
  });
}

struct EffectiveRun {
  SimulationConfig config;
  std::uint64_t seed = 0;
  std::int64_t n_rounds = 0;
};

EffectiveRun resolve(const CommonOptions& opts) {
  EffectiveRun run;
  run.config = load_config(opts.config_path);
  run.seed = opts.seed_set ? opts.seed : run.config.seed;
  run.n_rounds = opts.n_rounds_set ? opts.n_rounds : run.config.n_rounds;
  return run;
}

std::string join_args(int argc, char** argv) {
  std::string line;
  for (int i = 0; i < argc; ++i) {
    if (i) line += ' ';
    line += argv[i];
  }
  return line;
}

// Builds the manifest skeleton shared by every subcommand. Callers add
// command-specific keys and pass it to write_manifest once all data files
// are on disk.
json manifest_base(const std::string& subcommand, const EffectiveRun& run,
                   const CommonOptions& opts, const std::string& command_line) {
  json m;
  m["subcommand"] = subcommand;
  m["command_line"] = command_line;
  m["config"] = json::parse(config_to_json(run.config));
  m["seed"] = run.seed;
  m["n_rounds"] = run.n_rounds;
  m["workers"] = opts.workers;
  m["use_crn"] = opts.use_crn;
  m["version"] = kVersion;
  return m;
}

void write_manifest(const fs::path& out_dir, json manifest,
                    double duration_seconds) {
  manifest["duration_seconds"] = duration_seconds;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) {
    throw std::runtime_error("cannot write " +
                             (out_dir / "manifest.json").string());
  }
  out << manifest.dump(2) << "\n";
}

std::ofstream open_output(const fs::path& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / name);
  if (!out) {
    throw std::runtime_error("cannot write " + (out_dir / name).string());
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- round ---

int run_round(const CommonOptions& opts, int m_star, bool m_star_set,
              const std::vector<int>& profile_spec,
              const std::string& command_line) {
  const auto start = Clock::now();
  const EffectiveRun run = resolve(opts);
  const MarketParams& params = run.config.params;

  StrategyProfile profile =
      profile_spec.empty()
          ? StrategyProfile::symmetric(
                params.num_sellers,
                m_star_set ? m_star : params.max_free_samples,
                params.max_free_samples)
          : StrategyProfile(profile_spec, params.max_free_samples);
  if (profile.num_sellers() != static_cast<std::size_t>(params.num_sellers)) {
    throw std::invalid_argument("--profile must list exactly K strategies");
  }

  auto gen = rng::make_stream(run.seed, {0xD0D0ULL});
  const RoundResult round = simulate_round(params, profile, gen);
  const std::string payload = round_to_json(round, params);
  std::cout << payload << "\n";

  if (!opts.out_dir.empty()) {
    auto file = open_output(opts.out_dir, "round.json");
    file << payload << "\n";
    file.close();
    json manifest = manifest_base("round", run, opts, command_line);
    manifest["outputs"] = json::array({"round.json"});
    manifest["profile"] = std::vector<int>(profile.free_samples().begin(),
                                           profile.free_samples().end());
    write_manifest(opts.out_dir, std::move(manifest), seconds_since(start));
  }
  return 0;
}

// ------------------------------------------------------- deviation-table ---

int run_deviation_table(const CommonOptions& opts, int m_star, bool m_star_set,
                        const std::string& command_line) {
  const auto start = Clock::now();
  const EffectiveRun run = resolve(opts);
  const MarketParams& params = run.config.params;
  const int base = m_star_set ? m_star : params.max_free_samples;

  std::cerr << "deviation-table: K=" << params.num_sellers
            << " ratio=" << format_double(params.ratio()) << " m_star=" << base
            << " n_rounds=" << run.n_rounds << " seed=" << run.seed << "\n";

  const DeviationTable table = deviation_table(
      params, base, run.n_rounds, run.seed, opts.use_crn, opts.workers);

  auto csv = open_output(opts.out_dir, "deviation_table.csv");
  write_deviation_header(csv, "manifest.json");
  append_deviation_rows(csv, params.num_sellers, params.ratio(), table);
  csv.close();

  json manifest = manifest_base("deviation-table", run, opts, command_line);
  manifest["m_star"] = base;
  manifest["outputs"] = json::array({"deviation_table.csv"});
  const double elapsed = seconds_since(start);
  write_manifest(opts.out_dir, std::move(manifest), elapsed);
  std::cerr << "deviation-table: wrote deviation_table.csv ("
            << table.entries.size() << " rows) in " << elapsed << "s\n";
  return 0;
}

// --------------------------------------------------------------- detect ---

int run_detect(const CommonOptions& opts, const std::string& command_line) {
  const auto start = Clock::now();
  const EffectiveRun run = resolve(opts);
  const MarketParams& params = run.config.params;

  std::cerr << "detect: K=" << params.num_sellers
            << " ratio=" << format_double(params.ratio())
            << " n_rounds=" << run.n_rounds << " seed=" << run.seed << "\n";

  const std::vector<EquilibriumVerdict> verdicts = detect_equilibria(
      params, run.n_rounds, run.seed, opts.use_crn, opts.workers);

  auto csv = open_output(opts.out_dir, "detect.csv");
  write_detect_header(csv, "manifest.json");
  append_detect_rows(csv, params.num_sellers, params.ratio(), verdicts,
                     run.n_rounds, run.seed);
  csv.close();

  std::vector<int> equilibria;
  for (const auto& v : verdicts) {
    if (v.is_equilibrium) equilibria.push_back(v.strategy);
    std::cerr << "  m*=" << v.strategy << ": margin "
              << format_double(v.margin)
              << (v.is_equilibrium ? "  (equilibrium)" : "") << "\n";
  }
  const Region region = classify_region(equilibria, params.max_free_samples);

  json manifest = manifest_base("detect", run, opts, command_line);
  manifest["outputs"] = json::array({"detect.csv"});
  manifest["region"] = std::string(region_name(region));
  const double elapsed = seconds_since(start);
  write_manifest(opts.out_dir, std::move(manifest), elapsed);
  std::cerr << "detect: region " << region_name(region) << "; wrote detect.csv in "
            << elapsed << "s\n";
  return 0;
}

// ---------------------------------------------------------------- sweep ---

struct GridOptions {
  std::vector<int> sellers;
  std::vector<double> ratios;
  bool full_grid = false;
};

SweepGrid resolve_grid(const GridOptions& grid_opts) {
  SweepGrid grid;
  grid.seller_counts = grid_opts.sellers;
  if (grid.seller_counts.empty()) {
    for (int k = 2; k <= 10; ++k) grid.seller_counts.push_back(k);
  }
  if (grid_opts.full_grid) {
    for (int r = 2; r <= 300; ++r) grid.ratios.push_back(r);
  } else if (!grid_opts.ratios.empty()) {
    grid.ratios = grid_opts.ratios;
  } else {
    grid.ratios = {2, 5, 10, 20, 50, 100, 140, 200, 250, 300};
  }
  return grid;
}

int run_sweep(const CommonOptions& opts, const GridOptions& grid_opts,
              const std::string& command_line) {
  const auto start = Clock::now();
  const EffectiveRun run = resolve(opts);
  const MarketParams& params = run.config.params;
  const SweepGrid grid = resolve_grid(grid_opts);

  std::cerr << "sweep: " << grid.seller_counts.size() << " seller counts x "
            << grid.ratios.size() << " ratios, n_rounds=" << run.n_rounds
            << " seed=" << run.seed << " workers=" << opts.workers << "\n";

  auto phase_csv = open_output(opts.out_dir, "sweep_phase.csv");
  write_phase_header(phase_csv, params.max_free_samples, "manifest.json");
  auto dev_csv = open_output(opts.out_dir, "sweep_deviations.csv");
  write_deviation_header(dev_csv, "manifest.json");

  // Cells arrive in row-major order, so streaming rows out keeps the files
  // deterministic and the memory footprint flat.
  const SweepProgress progress = [&](const CellResult& cell, std::size_t done,
                                     std::size_t total) {
    append_phase_row(phase_csv, cell, params.max_free_samples, run.n_rounds,
                     run.seed);
    for (const auto& v : cell.verdicts) {
      append_deviation_rows(dev_csv, cell.num_sellers, cell.ratio, v.table);
    }
    std::cerr << "  [" << done << "/" << total << "] K=" << cell.num_sellers
              << " ratio=" << format_double(cell.ratio) << " -> "
              << region_name(cell.region) << "\n";
  };

  sweep_phase_diagram(params, grid, run.n_rounds, run.seed, opts.use_crn,
                      opts.workers, progress);
  phase_csv.close();
  dev_csv.close();

  json manifest = manifest_base("sweep", run, opts, command_line);
  manifest["grid"]["sellers"] = grid.seller_counts;
  manifest["grid"]["ratios"] = grid.ratios;
  manifest["outputs"] =
      json::array({"sweep_phase.csv", "sweep_deviations.csv"});
  const double elapsed = seconds_since(start);
  write_manifest(opts.out_dir, std::move(manifest), elapsed);
  std::cerr << "sweep: wrote sweep_phase.csv and sweep_deviations.csv in "
            << elapsed << "s\n";
  return 0;
}

// ---------------------------------------------------------------- rerun ---

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_rerun(const fs::path& manifest_path, const fs::path& out_dir,
              int workers, bool workers_set, const std::string& command_line) {
  const json manifest = json::parse(read_file(manifest_path));
  const std::string subcommand = manifest.at("subcommand").get<std::string>();
  if (subcommand == "round") {
    throw std::runtime_error(
        "rerun supports the file-producing subcommands only "
        "(deviation-table, detect, sweep)");
  }

  // Reconstruct the run from the embedded snapshot; the original config file
  // is not needed. A temporary file keeps the resolve() path uniform.
  const fs::path snapshot = out_dir / "rerun_config.json";
  fs::create_directories(out_dir);
  {
    std::ofstream out(snapshot);
    out << manifest.at("config").dump(2) << "\n";
  }
  CommonOptions opts;
  opts.config_path = snapshot.string();
  opts.out_dir = out_dir;
  opts.seed = manifest.at("seed").get<std::uint64_t>();
  opts.seed_set = true;
  opts.n_rounds = manifest.at("n_rounds").get<std::int64_t>();
  opts.n_rounds_set = true;
  opts.workers = workers_set ? workers : manifest.at("workers").get<int>();
  opts.use_crn = manifest.at("use_crn").get<bool>();

  int rc = 0;
  if (subcommand == "deviation-table") {
    rc = run_deviation_table(opts, manifest.at("m_star").get<int>(), true,
                             command_line);
  } else if (subcommand == "detect") {
    rc = run_detect(opts, command_line);
  } else if (subcommand == "sweep") {
    GridOptions grid_opts;
    grid_opts.sellers = manifest.at("grid").at("sellers").get<std::vector<int>>();
    grid_opts.ratios =
        manifest.at("grid").at("ratios").get<std::vector<double>>();
    rc = run_sweep(opts, grid_opts, command_line);
  } else {
    throw std::runtime_error("unknown subcommand in manifest: " + subcommand);
  }
  fs::remove(snapshot);
  if (rc != 0) return rc;

  // Data files must reproduce byte for byte. (The manifests themselves are
  // excluded: they record wall-clock duration and the actual command line.)
  const fs::path original_dir = manifest_path.parent_path();
  bool all_match = true;
  for (const auto& name_json : manifest.at("outputs")) {
    const std::string name = name_json.get<std::string>();
    const bool match =
        read_file(original_dir / name) == read_file(out_dir / name);
    std::cerr << "rerun: " << name
              << (match ? " identical" : " MISMATCH") << "\n";
    all_match = all_match && match;
  }
  if (!all_match) {
    std::cerr << "rerun: reproduction FAILED\n";
    return 3;
  }
  std::cerr << "rerun: all data files reproduced byte-identically\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-market simulator: procurement with free-sample signaling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  const std::string command_line = join_args(argc, argv);

  // round
  auto* round_cmd =
      app.add_subcommand("round", "simulate one round and print it as JSON");
  CommonOptions round_opts;
  add_common_options(*round_cmd, round_opts, /*needs_out_dir=*/false);
  int round_m_star = 0;
  std::vector<int> round_profile;
  auto* round_m_opt = round_cmd->add_option(
      "--m-star", round_m_star, "symmetric free-sample count (default: M)");
  round_cmd
      ->add_option("--profile", round_profile,
                   "comma-separated per-seller free-sample counts")
      ->delimiter(',')
      ->excludes(round_m_opt);

  // deviation-table
  auto* dev_cmd = app.add_subcommand(
      "deviation-table", "profits at a base strategy and all deviations");
  CommonOptions dev_opts;
  add_common_options(*dev_cmd, dev_opts, /*needs_out_dir=*/true);
  int dev_m_star = 0;
  auto* dev_m_opt = dev_cmd->add_option(
      "--m-star", dev_m_star, "symmetric base strategy (default: M)");

  // detect
  auto* detect_cmd = app.add_subcommand(
      "detect", "test every symmetric strategy for equilibrium");
  CommonOptions detect_opts;
  add_common_options(*detect_cmd, detect_opts, /*needs_out_dir=*/true);

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "phase diagram over (K, ratio) cells");
  CommonOptions sweep_opts;
  add_common_options(*sweep_cmd, sweep_opts, /*needs_out_dir=*/true);
  GridOptions grid_opts;
  sweep_cmd
      ->add_option("--sellers", grid_opts.sellers,
                   "comma-separated seller counts (default: 2..10)")
      ->delimiter(',');
  auto* ratios_opt =
      sweep_cmd
          ->add_option("--ratios", grid_opts.ratios,
                       "comma-separated quality ratios "
                       "(default: 2,5,10,20,50,100,140,200,250,300)")
          ->delimiter(',');
  sweep_cmd
      ->add_flag("--full-grid", grid_opts.full_grid,
                 "use every integer ratio from 2 to 300")
      ->excludes(ratios_opt);

  // rerun
  auto* rerun_cmd = app.add_subcommand(
      "rerun", "re-execute a run from its manifest and verify the bytes");
  std::string rerun_manifest;
  std::string rerun_out;
  int rerun_workers = 1;
  rerun_cmd->add_option("--manifest", rerun_manifest, "manifest.json of the run")
      ->required()
      ->check(CLI::ExistingFile);
  rerun_cmd->add_option("--out", rerun_out, "output directory for the rerun")
      ->required();
  auto* rerun_workers_opt = rerun_cmd->add_option(
      "--workers", rerun_workers,
      "worker threads (default: as recorded in the manifest)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (round_cmd->parsed()) {
      return run_round(round_opts, round_m_star, round_m_opt->count() > 0,
                       round_profile, command_line);
    }
    if (dev_cmd->parsed()) {
      return run_deviation_table(dev_opts, dev_m_star, dev_m_opt->count() > 0,
                                 command_line);
    }
    if (detect_cmd->parsed()) {
      return run_detect(detect_opts, command_line);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep(sweep_opts, grid_opts, command_line);
    }
    if (rerun_cmd->parsed()) {
      return run_rerun(rerun_manifest, rerun_out, rerun_workers,
                       rerun_workers_opt->count() > 0, command_line);
    }
  } catch (const ValidationError& e) {
    for (const auto& fe : e.errors()) {
      std::cerr << "config error: " << fe.field << ": " << fe.message << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
