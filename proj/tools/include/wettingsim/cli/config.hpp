#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wettingsim/fitting.hpp"
#include "wettingsim/mcmc.hpp"
#include "wettingsim/substrate.hpp"

namespace wettingsim::cli {

inline constexpr int kSchemaVersion = 1;

/// A sweep over (J, K) points, each simulated on `replicas` independent
/// substrates. Replica r uses substrate seed seed_base + r; its dynamics use
/// the same number as master seed (the generator domains are disjoint).
struct ExperimentConfig {
  std::vector<double> couplings = {1.0};
  std::vector<double> pressures = {0.1};
  std::size_t n = std::size_t{1} << 17;
  SubstrateDistribution substrate = SubstrateDistribution::ExpMeanOne;
  Schedule schedule;
  int replicas = 8;
  std::uint64_t seed_base = 1;
  int max_lag = 100;
  FitRange fit_range;
  double noise_floor_sigmas = 3.0;
  std::filesystem::path output_dir = "results";
  int threads = 0;  // 0: not set
  std::int64_t checkpoint_every = 0;

  // oracle command
  double oracle_delta = 0.1;
  double oracle_tail = 12.0;
  bool oracle_compare_mc = true;

  static constexpr std::size_t kOracleMaxSites = 16;

  /// Field-level checks; throws Error(Config) naming the offending key.
  void validate() const;

  /// FNV-1a over a canonical rendering of every field that affects results.
  /// Output directory and thread budget are excluded.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] std::string canonical() const;
};

ExperimentConfig parse_config(std::string_view toml_text, std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// --threads, then WETTINGSIM_THREADS, then the config value, then the hardware.
int resolve_threads(std::optional<int> flag, const ExperimentConfig& config);

/// Shortest decimal that round-trips, used in file names and tables.
std::string short_number(double x);

/// "J<J>_K<K>".
std::string point_tag(double J, double K);

}  // namespace wettingsim::cli
