#include <gtest/gtest.h>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "wettingsim/cli/commands.hpp"
#include "wettingsim/cli/config.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/version.hpp"

namespace wettingsim::cli {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("wettingsim-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wettingsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

constexpr const char* kSmoke = R"(schema = 1
[model]
J = [1.0, 3.0]
K = 0.2
[system]
n = 64
[schedule]
thermalization = 100
measure_every = 2
measurements = 10
[replicas]
count = 1
[analysis]
max_lag = 20
fit_range = [0, 20]
)";

fs::path write_config(const TempDir& dir, const std::string& text, const std::string& name = "config.toml") {
  const auto p = dir.path() / name;
  io::write_file_atomic(p, text);
  return p;
}

std::map<std::string, std::string> read_tree(const fs::path& root, const std::string& prefix) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with(prefix)) files[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return files;
}

ErrorKind parse_error_kind(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "config accepted";
  return ErrorKind::Io;
}

std::string parse_error_message(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Config, Defaults) {
  const auto c = parse_config("schema = 1\n");
  EXPECT_EQ(c.n, std::size_t{1} << 17);
  EXPECT_EQ(c.schedule.thermalization_sweeps, 10'000);
  EXPECT_EQ(c.schedule.measure_every, 10);
  EXPECT_EQ(c.schedule.n_measurements, 10'000);
  EXPECT_EQ(c.replicas, 8);
  EXPECT_EQ(c.max_lag, 100);
  EXPECT_EQ(c.fit_range.lo, 0);
  EXPECT_EQ(c.fit_range.hi, 100);
  EXPECT_EQ(c.noise_floor_sigmas, 3.0);
}

TEST(Config, FullExample) {
  const auto c = parse_config(R"(schema = 1
[model]
J = [1, 2.5]
K = [0.1, 0.2]
[system]
n = 128
substrate = "flat_zero"
[schedule]
thermalization = 5
measure_every = 3
measurements = 7
[replicas]
count = 2
seed_base = 40
[analysis]
max_lag = 12
fit_range = [1, 9]
noise_floor_sigmas = 2.0
[output]
dir = "x"
[run]
threads = 3
checkpoint_every = 100
[oracle]
delta = 0.05
tail = 14
compare_mc = false
)");
  EXPECT_EQ(c.couplings, (std::vector<double>{1.0, 2.5}));
  EXPECT_EQ(c.pressures, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(c.n, 128u);
  EXPECT_EQ(c.substrate, SubstrateDistribution::FlatZero);
  EXPECT_EQ(c.schedule, (Schedule{5, 3, 7}));
  EXPECT_EQ(c.replicas, 2);
  EXPECT_EQ(c.seed_base, 40u);
  EXPECT_EQ(c.max_lag, 12);
  EXPECT_EQ(c.fit_range.lo, 1);
  EXPECT_EQ(c.fit_range.hi, 9);
  EXPECT_EQ(c.output_dir, "x");
  EXPECT_EQ(c.threads, 3);
  EXPECT_EQ(c.checkpoint_every, 100);
  EXPECT_EQ(c.oracle_delta, 0.05);
  EXPECT_EQ(c.oracle_tail, 14.0);
  EXPECT_FALSE(c.oracle_compare_mc);
}

TEST(Config, FieldLevelErrors) {
  EXPECT_EQ(parse_error_kind(""), ErrorKind::Config);
  EXPECT_NE(parse_error_message("").find("schema"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 2\n").find("schema"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[model]\nK = 0\n").find("model.K"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[model]\nJ = -1\n").find("model.J"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[model]\nJ = \"one\"\n").find("model.J"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[system]\nn = 63\n").find("system.n"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[system]\nsubstrate = \"gauss\"\n").find("system.substrate"),
            std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[schedule]\nmeasure_every = 0\n").find("schedule.measure_every"),
            std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[replicas]\ncount = 0\n").find("replicas.count"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[analysis]\nfit_range = [5, 2]\n").find("analysis.fit_range"),
            std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\n[model]\nJJ = 1\n").find("model.JJ"), std::string::npos);
  EXPECT_NE(parse_error_message("schema = 1\ncolour = 1\n").find("colour"), std::string::npos);
  const auto syntax = parse_error_message("schema = 1\n[model\n");
  EXPECT_NE(syntax.find(":2:"), std::string::npos) << syntax;
}

TEST(Config, HashIgnoresThreadsAndOutput) {
  auto a = parse_config("schema = 1\n");
  auto b = a;
  b.threads = 7;
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.couplings = {2.0};
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, ThreadResolution) {
  ExperimentConfig c;
  ::unsetenv("WETTINGSIM_THREADS");
  EXPECT_GE(resolve_threads(std::nullopt, c), 1);
  c.threads = 5;
  EXPECT_EQ(resolve_threads(std::nullopt, c), 5);
  ::setenv("WETTINGSIM_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(std::nullopt, c), 3);
  EXPECT_EQ(resolve_threads(2, c), 2);
  ::setenv("WETTINGSIM_THREADS", "many", 1);
  EXPECT_THROW((void)resolve_threads(std::nullopt, c), Error);
  ::unsetenv("WETTINGSIM_THREADS");
  EXPECT_THROW((void)resolve_threads(0, c), Error);
}

TEST(Config, Tags) {
  EXPECT_EQ(short_number(0.1), "0.1");
  EXPECT_EQ(short_number(10.0), "10");
  EXPECT_EQ(point_tag(2.5, 0.05), "J2.5_K0.05");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--version"}).code, kExitOk);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({"simulate"}).code, kExitConfig);
  EXPECT_EQ(cli({"simulate", "--config", "/nonexistent/x.toml"}).code, kExitConfig);
  TempDir dir;
  const auto bad = write_config(dir, "schema = 1\n[model]\nK = -1\n");
  const auto r = cli({"simulate", "--config", bad.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("model.K"), std::string::npos);
  const auto good = write_config(dir, kSmoke, "good.toml");
  EXPECT_EQ(cli({"simulate", "--config", good.string(), "--threads", "0"}).code, kExitConfig);
}

TEST(Cli, SmokeSimulateIsFastAndStamped) {
  TempDir dir;
  const auto cfg = write_config(dir, R"(schema = 1
[model]
J = 1.0
K = 0.1
[system]
n = 64
[schedule]
measurements = 10
[replicas]
count = 1
)");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = cli({"simulate", "--config", cfg.string(), "--out", (dir.path() / "out").string(), "--threads", "1"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(seconds, 1.0);
  const auto config = load_config(cfg);
  for (const auto& [name, text] : read_tree(dir.path() / "out", "")) {
    EXPECT_NE(text.find(kVersion), std::string::npos) << name;
    EXPECT_NE(text.find(config.hash()), std::string::npos) << name;
  }
  const auto table = parse_correlation_csv(io::read_file(dir.path() / "out" / "correlation_J1_K0.1.csv"));
  EXPECT_EQ(table.estimate.n_measurements, 10);
  EXPECT_EQ(table.estimate.n_replicas, 1);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "raw" / "J1_K0.1_r0_profile.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "report_J1_K0.1.json"));
  EXPECT_FALSE(fs::exists(dir.path() / "out" / "checkpoints"));
}

TEST(Cli, OutputDirRelativeToConfig) {
  TempDir dir;
  fs::create_directories(dir.path() / "cfg");
  const auto cfg = write_config(dir, std::string(kSmoke) + "[output]\ndir = \"res\"\n", "cfg/c.toml");
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--threads", "1"}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "cfg" / "res" / "correlation_J1_K0.2.csv"));
}

TEST(Cli, OutputsIdenticalAcrossThreadCounts) {
  TempDir dir;
  const auto cfg = write_config(dir, kSmoke);
  const auto a = dir.path() / "a", b = dir.path() / "b", c = dir.path() / "c";
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", a.string(), "--threads", "1"}).code, kExitOk);
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", b.string(), "--threads", "4"}).code, kExitOk);
  ::setenv("WETTINGSIM_THREADS", "3", 1);
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", c.string()}).code, kExitOk);
  ::unsetenv("WETTINGSIM_THREADS");
  const auto fa = read_tree(a, "correlation_"), fb = read_tree(b, "correlation_"), fc = read_tree(c, "correlation_");
  EXPECT_EQ(fa.size(), 2u);
  EXPECT_EQ(fa, fb);
  EXPECT_EQ(fa, fc);
  EXPECT_EQ(read_tree(a / "raw", "J"), read_tree(b / "raw", "J"));
}

TEST(Cli, InterruptedRunResumesBitExactly) {
  TempDir dir;
  const auto cfg = write_config(dir, kSmoke);
  const auto ref = dir.path() / "ref", out = dir.path() / "out";
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", ref.string(), "--threads", "1"}).code, kExitOk);

  interrupt_flag() = true;
  const auto stopped = cli({"simulate", "--config", cfg.string(), "--out", out.string(), "--threads", "1"});
  interrupt_flag() = false;
  EXPECT_EQ(stopped.code, kExitRuntime);
  EXPECT_NE(stopped.err.find("resume"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "checkpoints" / "J1_K0.2_r0.ckpt"));
  EXPECT_FALSE(fs::exists(out / "correlation_J1_K0.2.csv"));

  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", out.string(), "--threads", "1"}).code, kExitOk);
  EXPECT_EQ(read_tree(ref, "correlation_"), read_tree(out, "correlation_"));
  EXPECT_FALSE(fs::exists(out / "checkpoints"));
}

TEST(Cli, ForeignCheckpointRejected) {
  TempDir dir;
  const auto cfg = write_config(dir, kSmoke);
  const auto out = dir.path() / "out";
  interrupt_flag() = true;
  (void)cli({"simulate", "--config", cfg.string(), "--out", out.string(), "--threads", "1"});
  interrupt_flag() = false;
  std::string text = kSmoke;
  text.replace(text.find("thermalization = 100"), 20, "thermalization = 101");
  const auto other = write_config(dir, text, "other.toml");
  const auto r = cli({"simulate", "--config", other.string(), "--out", out.string(), "--threads", "1"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("checkpoint"), std::string::npos);
}

void write_synthetic(const fs::path& path, double J, double K, double a, double b, double c) {
  CorrelationEstimate e;
  e.max_lag = 100;
  for (int j = 0; j <= 100; ++j) e.f.push_back(a * std::exp(-std::pow(j / b, c)));
  e.std_error.assign(e.f.size(), 0.0);
  e.n_measurements = 1;
  e.n_replicas = 1;
  io::write_file_atomic(path, format_correlation_csv(e, {{"J", io::format_double(J)},
                                                         {"K", io::format_double(K)},
                                                         {"mean_thickness", io::format_double(3 * std::pow(K, -1.0 / 3))},
                                                         {"config_hash", "abc"}}));
}

TEST(Cli, FitRecoversSyntheticCurves) {
  TempDir dir;
  const auto in = dir.path() / "in", out = dir.path() / "out";
  fs::create_directories(in);
  const std::vector<std::tuple<double, double, double, double, double>> curves = {
      {1, 0.1, 2.0, 5.0, 1.0}, {2, 0.1, 1.5, 8.0, 1.2}, {5, 0.1, 0.7, 15.0, 1.45},
      {5, 0.2, 0.5, 10.0, 1.4}, {5, 0.4, 0.3, 6.3, 1.35}};
  for (const auto& [J, K, a, b, c] : curves) {
    write_synthetic(in / ("correlation_" + point_tag(J, K) + ".csv"), J, K, a, b, c);
  }
  const auto r = cli({"fit", "--in", in.string(), "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const auto& [J, K, a, b, c] : curves) {
    const auto j = nlohmann::json::parse(io::read_file(out / ("fit_" + point_tag(J, K) + ".json")));
    for (const char* key : {"J", "K", "a", "b", "c", "rms", "range", "c_low", "c_high", "inflection", "converged"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_NEAR(j["a"].get<double>(), a, 1e-6 * a);
    EXPECT_NEAR(j["b"].get<double>(), b, 1e-6 * b);
    EXPECT_NEAR(j["c"].get<double>(), c, 1e-6 * c);
    EXPECT_NEAR(j["c_low"].get<double>(), c, 1e-6);
    EXPECT_NEAR(j["c_high"].get<double>(), c, 1e-6);
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_EQ(j["range"], nlohmann::json::array({0, 100}));
  }
  const auto summary = io::read_file(out / "fit_summary.csv");
  EXPECT_NE(summary.find("J,K,a,b,c,c_low,c_high,inflection,rms,converged"), std::string::npos);
  const auto scaling = io::read_file(out / "scaling.csv");
  EXPECT_NE(scaling.find("5,thickness,-0.33333333333333"), std::string::npos) << scaling;
  EXPECT_NE(io::read_file(out / "common_point.csv").find("0.10000000000000001,"), std::string::npos);
}

TEST(Cli, FitRecordsFailuresWithoutAborting) {
  TempDir dir;
  const auto in = dir.path() / "in", out = dir.path() / "out";
  fs::create_directories(in);
  write_synthetic(in / "correlation_a.csv", 1, 0.1, 1.0, 5.0, 1.0);
  io::write_file_atomic(in / "correlation_b.csv", "not,a,table\n");
  const auto r = cli({"fit", "--in", in.string(), "--out", out.string()});
  EXPECT_EQ(r.code, kExitOk);
  const auto j = nlohmann::json::parse(io::read_file(out / "fit_b.json"));
  EXPECT_FALSE(j["converged"].get<bool>());
  EXPECT_TRUE(j.contains("error"));
  EXPECT_NE(r.out.find("fitted 1 of 2"), std::string::npos);
}

TEST(Cli, FitEmptyDirectory) {
  TempDir dir;
  const auto r = cli({"fit", "--in", dir.path().string(), "--out", (dir.path() / "o").string()});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("no correlation"), std::string::npos);
}

TEST(Cli, OracleSizeCap) {
  TempDir dir;
  const auto cfg = write_config(dir, "schema = 1\n[system]\nn = 32\n");
  const auto r = cli({"oracle", "--config", cfg.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("16"), std::string::npos);
}

TEST(Cli, OracleZeroCouplingTripleAgreement) {
  TempDir dir;
  const auto cfg = write_config(dir, R"(schema = 1
[model]
J = 0.0
K = 0.5
[system]
n = 4
[schedule]
thermalization = 10
measure_every = 1
measurements = 20000
[replicas]
seed_base = 3
[oracle]
delta = 0.05
tail = 20
)");
  const auto r = cli({"oracle", "--config", cfg.string(), "--out", (dir.path() / "o").string(), "--threads", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(io::read_file(dir.path() / "o" / "oracle_J0_K0.5.json"));
  for (const char* key : {"N", "J", "K", "delta", "h_max", "substrate_seed", "mean_heights", "f",
                          "quadrature_error_estimate"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["N"].get<int>(), 4);
  EXPECT_EQ(j["substrate_seed"].get<int>(), 3);
  const auto s = generate_substrate(4, 3, SubstrateDistribution::ExpMeanOne);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(j["mean_heights"][i].get<double>(), s.heights[i] + 2.0, 1e-4);
  EXPECT_NEAR(j["f"][0].get<double>(), 4.0, 1e-3);
  for (const auto& row : j["comparison"]) {
    EXPECT_LT(std::abs(row["z"].get<double>()), 3.0) << row.dump();
    if (row["observable"] == "mean_height") {
      const auto i = row["index"].get<std::size_t>();
      EXPECT_LT(std::abs(row["mc"].get<double>() - (s.heights[i] + 2.0)), 3 * row["mc_stderr"].get<double>());
    }
  }
  EXPECT_TRUE(fs::exists(dir.path() / "o" / "oracle_comparison_J0_K0.5.csv"));
}

TEST(Cli, SubstrateGenAndInspect) {
  TempDir dir;
  const auto file = dir.path() / "s.txt";
  EXPECT_EQ(cli({"substrate", "gen", "--n", "1000", "--seed", "9", "--out", file.string()}).code, kExitOk);
  EXPECT_EQ(load_substrate(file), generate_substrate(1000, 9, SubstrateDistribution::ExpMeanOne));
  const auto r = cli({"substrate", "inspect", file.string(), "--max-lag", "3"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("seed: 9"), std::string::npos);
  EXPECT_NE(r.out.find("checksum: ok"), std::string::npos);
  EXPECT_EQ(cli({"substrate", "gen", "--n", "10", "--seed", "1", "--distribution", "gauss", "--out", file.string()})
                .code,
            kExitConfig);
  io::write_file_atomic(file, "garbage\n");
  EXPECT_EQ(cli({"substrate", "inspect", file.string()}).code, kExitRuntime);
  EXPECT_EQ(cli({"substrate"}).code, kExitConfig);
}

}  // namespace
}  // namespace wettingsim::cli
