#include <CLI11.hpp>

#include <cmath>
#include <ostream>

#include "wettingsim/cli/commands.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/version.hpp"

namespace wettingsim::cli {

namespace fs = std::filesystem;

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::SizeCap:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

void inspect_substrate(const fs::path& path, int max_lag, std::ostream& out) {
  const auto s = load_substrate(path);
  double mean = 0.0;
  for (double h : s.heights) mean += h;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double h : s.heights) var += (h - mean) * (h - mean);
  var /= static_cast<double>(s.size());
  out << "file: " << path.string() << "\nn: " << s.size() << "\nseed: " << s.seed
      << "\ngenerator: " << s.generator_id << "\ndistribution: " << to_string(s.distribution)
      << "\nchecksum: ok\nmean: " << mean << "\nvariance: " << var << "\nautocovariance:\n";
  const auto ac = substrate_autocovariance(s, max_lag);
  for (std::size_t j = 0; j < ac.f.size(); ++j) out << "  " << j << ' ' << ac.f[j] << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte-Carlo simulation and analysis of an SOS film on a random substrate", "wettingsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  fs::path sim_config, sim_out;
  std::optional<int> sim_threads;
  auto* simulate = app.add_subcommand("simulate", "run the Monte-Carlo sweep described by a config file");
  simulate->add_option("--config", sim_config, "TOML config")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "output directory (overrides output.dir)");
  simulate->add_option("--threads", sim_threads, "thread budget (overrides WETTINGSIM_THREADS and run.threads)");

  fs::path fit_in, fit_out;
  auto* fit = app.add_subcommand("fit", "fit stretched exponentials to correlation CSVs");
  fit->add_option("--in", fit_in, "directory with correlation_*.csv")->required();
  fit->add_option("--out", fit_out, "output directory")->required();

  fs::path oracle_config, oracle_out;
  std::optional<int> oracle_threads;
  auto* oracle = app.add_subcommand("oracle", "exact small-system values and Monte-Carlo z-scores");
  oracle->add_option("--config", oracle_config, "TOML config")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_out, "output directory (overrides output.dir)");
  oracle->add_option("--threads", oracle_threads, "thread budget");

  auto* substrate = app.add_subcommand("substrate", "generate or inspect substrate files");
  substrate->require_subcommand(1);
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_dist = "exp_mean_one";
  fs::path gen_out;
  auto* gen = substrate->add_subcommand("gen", "generate a substrate file");
  gen->add_option("--n", gen_n, "number of sites")->required();
  gen->add_option("--seed", gen_seed, "substrate seed")->required();
  gen->add_option("--distribution", gen_dist, "exp_mean_one or flat_zero");
  gen->add_option("--out", gen_out, "output file")->required();
  fs::path inspect_path;
  int inspect_lag = 10;
  auto* inspect = substrate->add_subcommand("inspect", "verify and summarise a substrate file");
  inspect->add_option("file", inspect_path, "substrate file")->required();
  inspect->add_option("--max-lag", inspect_lag, "largest autocovariance lag shown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) {
      auto config = load_config(sim_config);
      if (!sim_out.empty()) config.output_dir = sim_out;
      const int threads = resolve_threads(sim_threads, config);
      const auto result = run_simulate(config, threads, out, &interrupt_flag());
      if (result.interrupted) {
        err << "wettingsim: interrupted; checkpoints are in " << (config.output_dir / "checkpoints").string()
            << ", rerun the same command to resume\n";
        return kExitRuntime;
      }
      for (const auto& f : result.correlation_files) out << "wrote " << f.string() << '\n';
    } else if (*fit) {
      const auto batch = run_fit(fit_in, fit_out, out);
      out << "fitted " << batch.records.size() - static_cast<std::size_t>(batch.failures()) << " of "
          << batch.records.size() << " curve(s)\n";
      if (batch.failures() == static_cast<int>(batch.records.size())) return kExitRuntime;
    } else if (*oracle) {
      auto config = load_config(oracle_config);
      if (!oracle_out.empty()) config.output_dir = oracle_out;
      const int threads = resolve_threads(oracle_threads, config);
      run_oracle(config, threads, out);
    } else if (*gen) {
      if (gen_n < 2) throw Error(ErrorKind::Config, "--n: must be >= 2");
      SubstrateDistribution dist;
      try {
        dist = parse_distribution(gen_dist);
      } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string("--distribution: ") + e.what());
      }
      save_substrate(generate_substrate(gen_n, gen_seed, dist), gen_out);
      out << "wrote " << gen_out.string() << '\n';
    } else if (*inspect) {
      inspect_substrate(inspect_path, inspect_lag, out);
    }
  } catch (const Error& e) {
    err << "wettingsim: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "wettingsim: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace wettingsim::cli
