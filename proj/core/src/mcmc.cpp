#include "wettingsim/mcmc.hpp"

#include <algorithm>

#include <chrono>
#include <cmath>
#include <string>

#include "wettingsim/error.hpp"
#include "wettingsim/rng.hpp"

namespace wettingsim {

void Schedule::validate() const {
  if (thermalization_sweeps < 1) throw Error(ErrorKind::InvalidParams, "thermalization_sweeps must be >= 1");
  if (measure_every < 1) throw Error(ErrorKind::InvalidParams, "measure_every must be >= 1");
  if (n_measurements < 0) throw Error(ErrorKind::InvalidParams, "n_measurements must be >= 0");
}

double RunSeed::site_uniform(std::uint64_t site, std::uint64_t sweep) const noexcept {
  const auto block = stream_block(master, StreamDomain::Dynamics, site / 2, sweep);
  return uniform_open(site % 2 == 0 ? block.first : block.second);
}

FieldConfig init_config(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p) {
  p.validate();
  if (!substrate) throw Error(ErrorKind::InvalidParams, "missing substrate");
  std::vector<double> h(substrate->heights);
  const double lift = 1.0 / p.pressure;
  for (double& x : h) x += lift;
  return FieldConfig(std::move(substrate), std::move(h));
}

void checkerboard_sweep(FieldConfig& c, const ModelParams& p, RunSeed seed, std::int64_t sweep_index, int threads) {
  const auto n = static_cast<std::int64_t>(c.size());
  if (n % 2 != 0) {
    throw Error(ErrorKind::InvalidSize, "checkerboard sweep needs an even number of sites, got " + std::to_string(n));
  }
  const LocalHeatBath sampler(p);
  if (threads < 1) threads = 1;
  double* h = c.mutable_heights().data();
  const double* floor = c.substrate().heights.data();
  const std::int64_t half = n / 2;
  const auto sweep = static_cast<std::uint64_t>(sweep_index);
  // Variates of sites 2k and 2k+1 are the two halves of block (k, sweep).
  std::vector<double> uniforms(static_cast<std::size_t>(n));
  constexpr std::int64_t kBlocksPerTask = 1024;
  const std::int64_t tasks = (half + kBlocksPerTask - 1) / kBlocksPerTask;

#pragma omp parallel num_threads(threads) if (threads > 1)
  {
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < tasks; ++t) {
      const std::int64_t first = t * kBlocksPerTask;
      const std::int64_t count = std::min(kBlocksPerTask, half - first);
      fill_stream_uniforms(seed.master, StreamDomain::Dynamics, static_cast<std::uint64_t>(first),
                           static_cast<std::uint64_t>(count), sweep, uniforms.data() + 2 * first);
    }
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < half; ++k) {
      const std::int64_t i = 2 * k;
      const std::int64_t left = (i == 0) ? n - 1 : i - 1;
      h[i] = sampler.draw(h[left], h[i + 1], floor[i], uniforms[static_cast<std::size_t>(i)]);
    }
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < half; ++k) {
      const std::int64_t i = 2 * k + 1;
      const std::int64_t right = (i + 1 == n) ? 0 : i + 1;
      h[i] = sampler.draw(h[i - 1], h[right], floor[i], uniforms[static_cast<std::size_t>(i)]);
    }
  }
}

Simulation::Simulation(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p,
                       const Schedule& schedule, RunSeed seed)
    : params_(p), schedule_(schedule), seed_(seed), config_(init_config(std::move(substrate), p)) {
  schedule_.validate();
  if (config_.size() % 2 != 0) {
    throw Error(ErrorKind::InvalidSize, "simulation needs an even number of sites");
  }
}

Simulation::Simulation(const Checkpoint& cp)
    : params_(cp.params),
      schedule_(cp.schedule),
      seed_(cp.seed),
      config_(cp.substrate, cp.heights),
      next_sweep_(cp.next_sweep),
      measurements_done_(cp.measurements_done),
      pending_sink_states_(cp.sink_states) {
  params_.validate();
  schedule_.validate();
}

Checkpoint Simulation::checkpoint(std::span<MeasurementSink* const> sinks) const {
  Checkpoint cp;
  cp.substrate = config_.substrate_ptr();
  cp.params = params_;
  cp.schedule = schedule_;
  cp.seed = seed_;
  cp.next_sweep = next_sweep_;
  cp.measurements_done = measurements_done_;
  cp.heights.assign(config_.heights().begin(), config_.heights().end());
  for (auto* sink : sinks) cp.sink_states.push_back(sink->save_state());
  return cp;
}

RunReport Simulation::run(std::span<MeasurementSink* const> sinks, const RunControl& control) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!pending_sink_states_.empty()) {
    if (pending_sink_states_.size() != sinks.size()) {
      throw Error(ErrorKind::MalformedFile, "checkpoint sink count does not match the sinks supplied");
    }
    for (std::size_t k = 0; k < sinks.size(); ++k) {
      if (!pending_sink_states_[k].empty()) sinks[k]->restore_state(pending_sink_states_[k]);
    }
    pending_sink_states_.clear();
  }

  const std::int64_t total = schedule_.total_sweeps();
  RunReport report;
  while (next_sweep_ < total) {
    checkerboard_sweep(config_, params_, seed_, next_sweep_, control.threads);
    ++next_sweep_;
    const std::int64_t after_therm = next_sweep_ - schedule_.thermalization_sweeps;
    if (after_therm > 0 && after_therm % schedule_.measure_every == 0 &&
        measurements_done_ < schedule_.n_measurements) {
      for (auto* sink : sinks) sink->observe(config_);
      ++measurements_done_;
    }
    const bool stop_requested = control.stop != nullptr && control.stop->load(std::memory_order_relaxed);
    const bool periodic = control.checkpoint_every > 0 && next_sweep_ % control.checkpoint_every == 0;
    if (!control.checkpoint_path.empty() && (stop_requested || (periodic && next_sweep_ < total))) {
      save_checkpoint(checkpoint(sinks), control.checkpoint_path);
    }
    if (stop_requested && next_sweep_ < total) {
      report.interrupted = true;
      break;
    }
  }

  report.thermalization_sweeps = std::min(next_sweep_, schedule_.thermalization_sweeps);
  report.measurement_sweeps = next_sweep_ - report.thermalization_sweeps;
  report.total_sweeps = next_sweep_;
  report.measurements = measurements_done_;
  report.final_energy = total_energy(config_, params_);
  report.final_volume = film_volume(config_);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

RunReport run_simulation(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p,
                         const Schedule& schedule, RunSeed seed, std::span<MeasurementSink* const> sinks,
                         const RunControl& control) {
  Simulation sim(std::move(substrate), p, schedule, seed);
  return sim.run(sinks, control);
}

std::vector<double> forward_chain_sample(const SubstrateSample& s, const ModelParams& p, double h_start,
                                         std::uint64_t seed, std::uint64_t stream) {
  p.validate();
  if (s.size() < 1) throw Error(ErrorKind::InvalidSize, "empty substrate");
  if (!(h_start >= s.heights[0])) throw Error(ErrorKind::InvalidParams, "h_start lies below the substrate");
  std::vector<double> h(s.size());
  h[0] = h_start;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto d = chain_transition(p, h[i - 1], s.heights[i]);
    h[i] = heat_bath_draw(d, uniform_open(stream_bits(seed, StreamDomain::Chain, i, stream)));
  }
  return h;
}

}  // namespace wettingsim
