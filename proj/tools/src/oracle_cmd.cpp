#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "wettingsim/cli/commands.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/version.hpp"

namespace wettingsim::cli {

namespace fs = std::filesystem;

namespace {

// Per-site height series of a small system.
class SiteSeries final : public MeasurementSink {
 public:
  explicit SiteSeries(std::size_t n) : series_(n) {}
  void observe(const FieldConfig& c) override {
    const auto h = c.heights();
    for (std::size_t i = 0; i < h.size(); ++i) series_[i].push_back(h[i]);
  }
  [[nodiscard]] const std::vector<double>& site(std::size_t i) const { return series_.at(i); }

 private:
  std::vector<std::vector<double>> series_;
};

ComparisonRow row(std::string observable, int index, double oracle, double oracle_error, double mc, double se) {
  ComparisonRow r{std::move(observable), index, oracle, oracle_error, mc, se, 0.0};
  const double sigma = std::hypot(oracle_error, se);
  r.z = sigma > 0.0 ? (mc - oracle) / sigma : (mc == oracle ? 0.0 : INFINITY);
  return r;
}

}  // namespace

std::vector<ComparisonRow> compare_with_oracle(std::shared_ptr<const SubstrateSample> substrate, const ModelParams& p,
                                               const Schedule& schedule, RunSeed seed, const OracleReport& oracle,
                                               int max_lag, int threads) {
  const std::size_t n = substrate->size();
  CorrelationAccumulator acc(n, max_lag);
  SiteSeries sites(n);
  MeasurementSink* sinks[] = {&acc, &sites};
  RunControl control;
  control.threads = threads;
  run_simulation(substrate, p, schedule, seed, sinks, control);
  const auto summary = finalize(acc);

  const double oracle_error = std::max(oracle.quadrature_error_estimate, kOracleTolerance);
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sites.site(i);
    double m = 0.0;
    for (double x : s) m += x;
    m /= static_cast<double>(s.size());
    rows.push_back(row("mean_height", static_cast<int>(i), oracle.mean_heights.at(i), oracle_error, m,
                       batch_means_error(s)));
  }
  const int lags = std::min<int>(summary.correlation.max_lag, static_cast<int>(oracle.f_spatial.size()) - 1);
  for (int j = 0; j <= lags; ++j) {
    const auto k = static_cast<std::size_t>(j);
    rows.push_back(row("f", j, oracle.f_spatial[k], oracle_error, summary.correlation.f[k],
                       summary.correlation.std_error[k]));
  }
  return rows;
}

std::vector<OraclePoint> run_oracle(const ExperimentConfig& config, int threads, std::ostream& log) {
  config.validate();
  if (config.n > ExperimentConfig::kOracleMaxSites) {
    throw Error(ErrorKind::SizeCap, "system.n: oracle supports at most " +
                                        std::to_string(ExperimentConfig::kOracleMaxSites) + " sites, got " +
                                        std::to_string(config.n));
  }
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  auto substrate = std::make_shared<const SubstrateSample>(generate_substrate(config.n, config.seed_base, config.substrate));

  std::vector<OraclePoint> points;
  for (double K : config.pressures) {
    for (double J : config.couplings) {
      const ModelParams p{J, K};
      OraclePoint pt;
      pt.report = evaluate_oracle(*substrate, p, {config.oracle_delta, config.oracle_tail, config.max_lag});
      const std::string tag = point_tag(J, K);

      nlohmann::json j;
      j["N"] = pt.report.n;
      j["J"] = J;
      j["K"] = K;
      j["delta"] = pt.report.delta;
      j["h_max"] = pt.report.h_max;
      j["substrate_seed"] = pt.report.substrate_seed;
      j["mean_heights"] = pt.report.mean_heights;
      j["f"] = pt.report.f;
      j["f_spatial"] = pt.report.f_spatial;
      j["quadrature_error_estimate"] = pt.report.quadrature_error_estimate;
      j["log_partition"] = pt.report.log_partition;
      j["version"] = kVersion;
      j["config_hash"] = config.hash();

      log << "oracle " << tag << ": N=" << pt.report.n << " h_max=" << pt.report.h_max
          << " quadrature error " << pt.report.quadrature_error_estimate << '\n';
      if (config.oracle_compare_mc) {
        pt.comparison = compare_with_oracle(substrate, p, config.schedule, RunSeed{config.seed_base}, pt.report,
                                            static_cast<int>(config.n / 2), threads);
        auto& rows = j["comparison"] = nlohmann::json::array();
        std::ostringstream csv;
        csv << "# version=" << kVersion << "\n# config_hash=" << config.hash() << "\n# J=" << io::format_double(J)
            << "\n# K=" << io::format_double(K) << "\nobservable,index,oracle,oracle_error,mc,mc_stderr,z\n";
        double worst = 0.0;
        for (const auto& r : pt.comparison) {
          rows.push_back({{"observable", r.observable},
                          {"index", r.index},
                          {"oracle", r.oracle},
                          {"oracle_error", r.oracle_error},
                          {"mc", r.mc},
                          {"mc_stderr", r.mc_stderr},
                          {"z", r.z}});
          csv << r.observable << ',' << r.index << ',' << io::format_double(r.oracle) << ','
              << io::format_double(r.oracle_error) << ',' << io::format_double(r.mc) << ','
              << io::format_double(r.mc_stderr) << ',' << io::format_double(r.z) << '\n';
          worst = std::max(worst, std::abs(r.z));
          log << "  " << r.observable << '[' << r.index << "] oracle " << r.oracle << "  mc " << r.mc << " +- "
              << r.mc_stderr << "  z " << r.z << '\n';
        }
        log << "  max |z| = " << worst << '\n';
        io::write_file_atomic(out / ("oracle_comparison_" + tag + ".csv"), csv.str());
      }
      io::write_file_atomic(out / ("oracle_" + tag + ".json"), j.dump(2) + "\n");
      points.push_back(std::move(pt));
    }
  }
  return points;
}

}  // namespace wettingsim::cli
