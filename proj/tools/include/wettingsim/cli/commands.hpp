#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wettingsim/cli/config.hpp"
#include "wettingsim/fitting.hpp"
#include "wettingsim/observables.hpp"
#include "wettingsim/oracle.hpp"

namespace wettingsim::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

/// Parses argv and dispatches to a subcommand. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Set from a signal handler to stop running simulations at the next sweep
/// boundary; they write checkpoints and the command exits with kExitRuntime.
std::atomic<bool>& interrupt_flag();

// simulate ------------------------------------------------------------------

struct SimulateResult {
  std::vector<std::filesystem::path> correlation_files;  // one per (J, K)
  bool interrupted = false;
};

/// Runs every (J, K, replica) job on a pool of `threads` workers and writes
/// per-replica raw files, disorder-averaged correlation CSVs and run reports.
/// Jobs with a checkpoint in <out>/checkpoints resume from it.
SimulateResult run_simulate(const ExperimentConfig& config, int threads, std::ostream& log,
                            const std::atomic<bool>* stop = nullptr);

// fit -----------------------------------------------------------------------

struct FitRecord {
  std::filesystem::path source;
  double J = 0.0;
  double K = 0.0;
  std::optional<StretchedExpFit> fit;
  std::optional<double> c_low;
  std::optional<double> c_high;
  double inflection = 0.0;
  double mean_thickness = 0.0;  // NaN when absent from the CSV
  std::string error;            // empty on success
};

struct FitBatch {
  std::vector<FitRecord> records;
  [[nodiscard]] int failures() const;
};

/// Fits every correlation_*.csv in `in` and writes fit_<tag>.json,
/// fit_summary.csv, common_point.csv and scaling.csv into `out`.
FitBatch run_fit(const std::filesystem::path& in, const std::filesystem::path& out, std::ostream& log);

FitRecord fit_correlation_table(const CorrelationTable& table, const FitOptions& options);

// oracle --------------------------------------------------------------------

/// Oracle uncertainty used in z-scores when the Richardson estimate is smaller.
inline constexpr double kOracleTolerance = 1e-3;

struct ComparisonRow {
  std::string observable;  // "mean_height" or "f"
  int index = 0;           // site or lag
  double oracle = 0.0;
  double oracle_error = 0.0;
  double mc = 0.0;
  double mc_stderr = 0.0;
  double z = 0.0;
};

/// Runs the Monte-Carlo pipeline on `substrate` and compares per-site mean
/// heights and f(j <= max_lag) against the oracle; f is compared with the
/// expectation of the spatial estimator at this N.
std::vector<ComparisonRow> compare_with_oracle(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p,
                                               const Schedule& schedule, RunSeed seed, const OracleReport& oracle,
                                               int max_lag, int threads = 1);

struct OraclePoint {
  OracleReport report;
  std::vector<ComparisonRow> comparison;
};

/// Requires config.n <= 16. Writes oracle_<tag>.json (and a comparison CSV when
/// config.oracle_compare_mc) for each (J, K) using the replica-0 substrate.
std::vector<OraclePoint> run_oracle(const ExperimentConfig& config, int threads, std::ostream& log);

}  // namespace wettingsim::cli
