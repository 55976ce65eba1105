#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "wettingsim/cli/commands.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/version.hpp"

namespace wettingsim::cli {

namespace fs = std::filesystem;

namespace {

struct Job {
  std::size_t point = 0;
  int replica = 0;
};

struct ReplicaResult {
  bool done = false;
  CorrelationEstimate correlation;
  double mean_height = 0.0;
  double mean_thickness = 0.0;
  RunReport report;
};

struct Point {
  double J = 0.0;
  double K = 0.0;
  std::vector<ReplicaResult> replicas;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Metadata common_metadata(const ExperimentConfig& c, double J, double K) {
  return {{"version", kVersion},
          {"config_hash", c.hash()},
          {"J", io::format_double(J)},
          {"K", io::format_double(K)},
          {"n", std::to_string(c.n)},
          {"substrate", std::string(to_string(c.substrate))},
          {"thermalization", std::to_string(c.schedule.thermalization_sweeps)},
          {"measure_every", std::to_string(c.schedule.measure_every)},
          {"measurements", std::to_string(c.schedule.n_measurements)}};
}

bool checkpoint_matches(const Checkpoint& cp, const SubstrateSample& s, const ModelParams& p, const Schedule& sched,
                        RunSeed seed) {
  return *cp.substrate == s && cp.params == p && cp.schedule == sched && cp.seed == seed;
}

ReplicaResult run_job(const ExperimentConfig& c, double J, double K, int replica, int job_threads,
                      const fs::path& out, const std::atomic<bool>* stop) {
  const ModelParams p{J, K};
  const std::uint64_t seed = c.seed_base + static_cast<std::uint64_t>(replica);
  auto substrate = std::make_shared<const SubstrateSample>(generate_substrate(c.n, seed, c.substrate));
  const std::string tag = point_tag(J, K) + "_r" + std::to_string(replica);
  const fs::path ckpt = out / "checkpoints" / (tag + ".ckpt");

  CorrelationAccumulator acc(c.n, c.max_lag);
  MeasurementSink* sinks[] = {&acc};
  std::optional<Simulation> sim;
  if (fs::exists(ckpt)) {
    Checkpoint cp = load_checkpoint(ckpt);
    if (!checkpoint_matches(cp, *substrate, p, c.schedule, RunSeed{seed})) {
      throw Error(ErrorKind::Config, "checkpoint " + ckpt.string() + " belongs to a different configuration");
    }
    sim.emplace(cp);
  } else {
    sim.emplace(substrate, p, c.schedule, RunSeed{seed});
  }

  RunControl control;
  control.threads = job_threads;
  control.stop = stop;
  control.checkpoint_path = ckpt;
  control.checkpoint_every = c.checkpoint_every;
  if (stop || c.checkpoint_every > 0) fs::create_directories(ckpt.parent_path());

  ReplicaResult r;
  r.report = sim->run(sinks, control);
  if (r.report.interrupted) return r;

  const auto summary = finalize(acc);
  double floor_mean = 0.0;
  for (double h : substrate->heights) floor_mean += h;
  floor_mean /= static_cast<double>(c.n);
  r.correlation = summary.correlation;
  r.mean_height = summary.mean_height;
  r.mean_thickness = summary.mean_height - floor_mean;
  r.done = true;

  auto meta = common_metadata(c, J, K);
  meta.emplace_back("replica", std::to_string(replica));
  meta.emplace_back("substrate_seed", std::to_string(seed));
  meta.emplace_back("dynamics_seed", std::to_string(seed));
  meta.emplace_back("generator", substrate->generator_id);
  meta.emplace_back("mean_height", io::format_double(summary.mean_height));
  meta.emplace_back("mean_height_stderr", io::format_double(summary.mean_height_error));
  meta.emplace_back("mean_thickness", io::format_double(r.mean_thickness));
  io::write_file_atomic(out / "raw" / (tag + "_correlation.csv"), format_correlation_csv(summary.correlation, meta));
  io::write_file_atomic(out / "raw" / (tag + "_profile.csv"),
                        format_profile_csv(substrate->heights, summary.mean_profile, meta));
  std::error_code ec;
  fs::remove(ckpt, ec);
  return r;
}

void write_point(const ExperimentConfig& c, const Point& pt, const fs::path& out, double wall_seconds,
                 const std::string& started, std::vector<fs::path>& files) {
  std::vector<CorrelationEstimate> estimates;
  std::vector<double> thickness;
  for (const auto& r : pt.replicas) {
    estimates.push_back(r.correlation);
    thickness.push_back(r.mean_thickness);
  }
  const auto avg = disorder_average(estimates);
  double tm = 0.0;
  for (double t : thickness) tm += t;
  tm /= static_cast<double>(thickness.size());
  double ss = 0.0;
  for (double t : thickness) ss += (t - tm) * (t - tm);
  const double te = thickness.size() > 1
                        ? std::sqrt(ss / static_cast<double>(thickness.size() - 1) / static_cast<double>(thickness.size()))
                        : 0.0;

  auto meta = common_metadata(c, pt.J, pt.K);
  meta.emplace_back("replicas", std::to_string(c.replicas));
  meta.emplace_back("seed_base", std::to_string(c.seed_base));
  meta.emplace_back("max_lag", std::to_string(c.max_lag));
  meta.emplace_back("fit_lo", std::to_string(c.fit_range.lo));
  meta.emplace_back("fit_hi", std::to_string(c.fit_range.hi));
  meta.emplace_back("noise_floor_sigmas", io::format_double(c.noise_floor_sigmas));
  meta.emplace_back("mean_thickness", io::format_double(tm));
  meta.emplace_back("mean_thickness_stderr", io::format_double(te));
  const auto tag = point_tag(pt.J, pt.K);
  const fs::path csv = out / ("correlation_" + tag + ".csv");
  io::write_file_atomic(csv, format_correlation_csv(avg, meta));
  files.push_back(csv);

  nlohmann::json report;
  report["version"] = kVersion;
  report["config_hash"] = c.hash();
  report["J"] = pt.J;
  report["K"] = pt.K;
  report["started_at"] = started;
  report["finished_at"] = utc_timestamp();
  report["wall_seconds"] = wall_seconds;
  auto& reps = report["replicas"] = nlohmann::json::array();
  for (std::size_t r = 0; r < pt.replicas.size(); ++r) {
    const auto& rr = pt.replicas[r];
    reps.push_back({{"replica", r},
                    {"substrate_seed", c.seed_base + r},
                    {"total_sweeps", rr.report.total_sweeps},
                    {"measurements", rr.report.measurements},
                    {"wall_seconds", rr.report.wall_seconds},
                    {"final_energy", rr.report.final_energy},
                    {"final_volume", rr.report.final_volume},
                    {"mean_height", rr.mean_height},
                    {"mean_thickness", rr.mean_thickness}});
  }
  io::write_file_atomic(out / ("report_" + tag + ".json"), report.dump(2) + "\n");
}

}  // namespace

SimulateResult run_simulate(const ExperimentConfig& config, int threads, std::ostream& log,
                            const std::atomic<bool>* stop) {
  config.validate();
  const fs::path out = config.output_dir;
  fs::create_directories(out / "raw");
  const std::string started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Point> points;
  for (double K : config.pressures) {
    for (double J : config.couplings) {
      points.push_back({J, K, std::vector<ReplicaResult>(static_cast<std::size_t>(config.replicas))});
    }
  }
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int r = 0; r < config.replicas; ++r) jobs.push_back({p, r});
  }

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  const int job_threads = std::max(1, threads / workers);
  log << "simulate: " << points.size() << " point(s) x " << config.replicas << " replica(s), n=" << config.n
      << ", " << workers << " worker(s) x " << job_threads << " thread(s)\n";

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  std::atomic<bool> abort{false};
  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const auto& job = jobs[k];
      auto& pt = points[job.point];
      try {
        auto res = run_job(config, pt.J, pt.K, job.replica, job_threads, out, stop);
        std::lock_guard lock(mu);
        if (res.done) {
          log << "  " << point_tag(pt.J, pt.K) << " replica " << job.replica << ": " << res.report.total_sweeps
              << " sweeps, " << res.report.measurements << " measurements, " << res.report.wall_seconds << " s\n";
        }
        pt.replicas[static_cast<std::size_t>(job.replica)] = std::move(res);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::error_code ec;
  if (fs::is_directory(out / "checkpoints", ec) && fs::is_empty(out / "checkpoints", ec)) fs::remove(out / "checkpoints", ec);

  SimulateResult result;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& pt : points) {
    const bool complete = std::all_of(pt.replicas.begin(), pt.replicas.end(), [](const auto& r) { return r.done; });
    if (!complete) {
      result.interrupted = true;
      continue;
    }
    write_point(config, pt, out, wall, started, result.correlation_files);
  }
  return result;
}

}  // namespace wettingsim::cli
