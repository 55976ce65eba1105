#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wettingsim/model.hpp"

namespace wettingsim {

/// Sweep counts are in MCS/S. n_measurements may be zero (thermalisation only).
struct Schedule {
  std::int64_t thermalization_sweeps = 10'000;
  std::int64_t measure_every = 10;
  std::int64_t n_measurements = 10'000;

  void validate() const;
  [[nodiscard]] std::int64_t total_sweeps() const noexcept {
    return thermalization_sweeps + measure_every * n_measurements;
  }
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Master seed of the film dynamics. The uniform variate used at (site, sweep)
/// is a pure function of (master, site, sweep); no generator state exists.
/// Sites 2k and 2k+1 take the two halves of Philox block (k, sweep).
struct RunSeed {
  std::uint64_t master = 0;

  [[nodiscard]] double site_uniform(std::uint64_t site, std::uint64_t sweep) const noexcept;
  friend bool operator==(const RunSeed&, const RunSeed&) = default;
};

/// h_i = h^1_i + 1/K.
FieldConfig init_config(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p);

/// Exact inverse-CDF heat-bath draw; the result is >= d.floor().
inline double heat_bath_draw(const PiecewiseExpDensity& d, double u) noexcept {
  const double h = d.quantile(u);
  return h < d.floor() ? d.floor() : h;
}

/// One MCS/S: all even sites given their odd neighbours, then all odd sites
/// given the refreshed even ones. Requires an even ring. The result does not
/// depend on `threads`.
void checkerboard_sweep(FieldConfig& c, const ModelParams& p, RunSeed seed, std::int64_t sweep_index,
                        int threads = 1);

/// Receives every measured configuration of a run.
class MeasurementSink {
 public:
  virtual ~MeasurementSink() = default;
  virtual void observe(const FieldConfig& c) = 0;

  /// Opaque state for checkpoints. Sinks that return an empty string are not
  /// restorable and start fresh on resume.
  [[nodiscard]] virtual std::string save_state() const { return {}; }
  virtual void restore_state(std::string_view /*state*/) {}
};

struct RunReport {
  std::int64_t thermalization_sweeps = 0;
  std::int64_t measurement_sweeps = 0;
  std::int64_t total_sweeps = 0;
  std::int64_t measurements = 0;
  double wall_seconds = 0.0;
  double final_energy = 0.0;
  double final_volume = 0.0;
  bool interrupted = false;
};

struct RunControl {
  int threads = 1;
  // Polled between sweeps; when set the run stops and writes a checkpoint.
  const std::atomic<bool>* stop = nullptr;
  std::filesystem::path checkpoint_path;
  std::int64_t checkpoint_every = 0;  // sweeps; 0 disables periodic checkpoints
};

/// Everything needed to continue a run bit-exactly.
struct Checkpoint {
  std::shared_ptr<const SubstrateSample> substrate;
  ModelParams params;
  Schedule schedule;
  RunSeed seed;
  std::int64_t next_sweep = 0;  // also the dynamics counter position
  std::int64_t measurements_done = 0;
  std::vector<double> heights;
  std::vector<std::string> sink_states;
};

std::string serialize_checkpoint(const Checkpoint& cp);
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Thermalisation followed by schedule.n_measurements measurements spaced
/// measure_every sweeps apart, driven sweep by sweep.
class Simulation {
 public:
  Simulation(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p, const Schedule& schedule,
             RunSeed seed);
  /// Restores configuration and counters; sink states are restored by run().
  explicit Simulation(const Checkpoint& cp);

  /// Runs to the end of the schedule (or until interrupted) and feeds sinks.
  RunReport run(std::span<MeasurementSink* const> sinks, const RunControl& control = {});

  [[nodiscard]] const FieldConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::int64_t next_sweep() const noexcept { return next_sweep_; }
  [[nodiscard]] std::int64_t measurements_done() const noexcept { return measurements_done_; }
  [[nodiscard]] bool finished() const noexcept { return next_sweep_ >= schedule_.total_sweeps(); }
  [[nodiscard]] Checkpoint checkpoint(std::span<MeasurementSink* const> sinks) const;

 private:
  ModelParams params_;
  Schedule schedule_;
  RunSeed seed_;
  FieldConfig config_;
  std::int64_t next_sweep_ = 0;
  std::int64_t measurements_done_ = 0;
  std::vector<std::string> pending_sink_states_;
};

RunReport run_simulation(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p,
                         const Schedule& schedule, RunSeed seed, std::span<MeasurementSink* const> sinks,
                         const RunControl& control = {});

/// Exact sequential sample of the open chain with transitions
/// P(dh_{i+1} | h_i) ~ exp(-J|h_{i+1} - h_i| - K h_{i+1}) on h_{i+1} >= h^1_{i+1}.
/// Element 0 is h_start. `stream` selects an independent chain for the same seed.
std::vector<double> forward_chain_sample(const SubstrateSample& s, const ModelParams& p, double h_start,
                                         std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace wettingsim
