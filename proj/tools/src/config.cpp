#include "wettingsim/cli/config.hpp"

#include <toml.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"

namespace wettingsim::cli {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Config, key + ": " + what);
}

void reject_unknown(const toml::table& t, const std::string& prefix, std::initializer_list<std::string_view> known) {
  const std::set<std::string_view> allowed(known);
  for (const auto& [k, v] : t) {
    if (!allowed.count(k.str())) config_error(prefix + std::string(k.str()), "unknown key");
  }
}

const toml::table* section(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  if (!node->is_table()) config_error(std::string(name), "expected a table");
  return node->as_table();
}

double get_double(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  config_error(key, "expected a number");
}

std::int64_t get_int(const toml::node& node, const std::string& key) {
  if (node.is_integer()) return node.as_integer()->get();
  config_error(key, "expected an integer");
}

bool get_bool(const toml::node& node, const std::string& key) {
  if (node.is_boolean()) return node.as_boolean()->get();
  config_error(key, "expected true or false");
}

std::string get_string(const toml::node& node, const std::string& key) {
  if (node.is_string()) return node.as_string()->get();
  config_error(key, "expected a string");
}

// A number or an array of numbers.
std::vector<double> get_doubles(const toml::node& node, const std::string& key) {
  std::vector<double> out;
  if (const auto* arr = node.as_array()) {
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(get_double(*arr->get(i), key));
  } else {
    out.push_back(get_double(node, key));
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (couplings.empty()) config_error("model.J", "at least one value required");
  if (pressures.empty()) config_error("model.K", "at least one value required");
  for (double J : couplings) {
    if (!std::isfinite(J) || J < 0.0) config_error("model.J", "must be finite and >= 0, got " + short_number(J));
  }
  for (double K : pressures) {
    if (!std::isfinite(K) || K <= 0.0) config_error("model.K", "must be finite and > 0, got " + short_number(K));
  }
  if (n < 2 || n % 2 != 0) config_error("system.n", "must be even and >= 2, got " + std::to_string(n));
  if (schedule.thermalization_sweeps < 1) config_error("schedule.thermalization", "must be >= 1");
  if (schedule.measure_every < 1) config_error("schedule.measure_every", "must be >= 1");
  if (schedule.n_measurements < 1) config_error("schedule.measurements", "must be >= 1");
  if (replicas < 1) config_error("replicas.count", "must be >= 1");
  if (seed_base > UINT64_MAX - static_cast<std::uint64_t>(replicas)) config_error("replicas.seed_base", "seed range overflows");
  if (max_lag < 0) config_error("analysis.max_lag", "must be >= 0");
  if (fit_range.lo < 0 || fit_range.hi < fit_range.lo) config_error("analysis.fit_range", "need 0 <= lo <= hi");
  if (!(noise_floor_sigmas >= 0.0)) config_error("analysis.noise_floor_sigmas", "must be >= 0");
  if (threads < 0) config_error("run.threads", "must be >= 0");
  if (checkpoint_every < 0) config_error("run.checkpoint_every", "must be >= 0");
  if (!(oracle_delta > 0.0)) config_error("oracle.delta", "must be > 0");
  if (!(oracle_tail >= 10.0)) config_error("oracle.tail", "must be >= 10");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "schema=" << kSchemaVersion << "\nJ=";
  for (double J : couplings) os << io::format_double(J) << ',';
  os << "\nK=";
  for (double K : pressures) os << io::format_double(K) << ',';
  os << "\nn=" << n << "\nsubstrate=" << to_string(substrate) << "\ntherm=" << schedule.thermalization_sweeps
     << "\nevery=" << schedule.measure_every << "\nT=" << schedule.n_measurements << "\nreplicas=" << replicas
     << "\nseed_base=" << seed_base << "\nmax_lag=" << max_lag << "\nfit=" << fit_range.lo << ',' << fit_range.hi
     << "\nnoise_floor=" << io::format_double(noise_floor_sigmas) << "\noracle_delta=" << io::format_double(oracle_delta)
     << "\noracle_tail=" << io::format_double(oracle_tail) << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const { return io::to_hex(io::fnv1a64(canonical())); }

ExperimentConfig parse_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ':' << e.source().begin.line << ':' << e.source().begin.column << ": " << e.description();
    throw Error(ErrorKind::Config, os.str());
  }

  reject_unknown(root, "", {"schema", "model", "system", "schedule", "replicas", "analysis", "output", "run", "oracle"});
  const auto* schema = root.get("schema");
  if (!schema) config_error("schema", "missing (expected " + std::to_string(kSchemaVersion) + ")");
  if (get_int(*schema, "schema") != kSchemaVersion) {
    config_error("schema", "unsupported version, expected " + std::to_string(kSchemaVersion));
  }

  ExperimentConfig c;
  if (const auto* t = section(root, "model")) {
    reject_unknown(*t, "model.", {"J", "K"});
    if (const auto* v = t->get("J")) c.couplings = get_doubles(*v, "model.J");
    if (const auto* v = t->get("K")) c.pressures = get_doubles(*v, "model.K");
  }
  if (const auto* t = section(root, "system")) {
    reject_unknown(*t, "system.", {"n", "substrate"});
    if (const auto* v = t->get("n")) {
      const auto n = get_int(*v, "system.n");
      if (n < 0) config_error("system.n", "must be positive");
      c.n = static_cast<std::size_t>(n);
    }
    if (const auto* v = t->get("substrate")) {
      try {
        c.substrate = parse_distribution(get_string(*v, "system.substrate"));
      } catch (const Error& e) {
        config_error("system.substrate", e.what());
      }
    }
  }
  if (const auto* t = section(root, "schedule")) {
    reject_unknown(*t, "schedule.", {"thermalization", "measure_every", "measurements"});
    if (const auto* v = t->get("thermalization")) c.schedule.thermalization_sweeps = get_int(*v, "schedule.thermalization");
    if (const auto* v = t->get("measure_every")) c.schedule.measure_every = get_int(*v, "schedule.measure_every");
    if (const auto* v = t->get("measurements")) c.schedule.n_measurements = get_int(*v, "schedule.measurements");
  }
  if (const auto* t = section(root, "replicas")) {
    reject_unknown(*t, "replicas.", {"count", "seed_base"});
    if (const auto* v = t->get("count")) c.replicas = static_cast<int>(get_int(*v, "replicas.count"));
    if (const auto* v = t->get("seed_base")) {
      const auto s = get_int(*v, "replicas.seed_base");
      if (s < 0) config_error("replicas.seed_base", "must be >= 0");
      c.seed_base = static_cast<std::uint64_t>(s);
    }
  }
  if (const auto* t = section(root, "analysis")) {
    reject_unknown(*t, "analysis.", {"max_lag", "fit_range", "noise_floor_sigmas"});
    if (const auto* v = t->get("max_lag")) c.max_lag = static_cast<int>(get_int(*v, "analysis.max_lag"));
    if (const auto* v = t->get("fit_range")) {
      const auto* arr = v->as_array();
      if (!arr || arr->size() != 2) config_error("analysis.fit_range", "expected [lo, hi]");
      c.fit_range.lo = static_cast<int>(get_int(*arr->get(0), "analysis.fit_range"));
      c.fit_range.hi = static_cast<int>(get_int(*arr->get(1), "analysis.fit_range"));
    }
    if (const auto* v = t->get("noise_floor_sigmas")) c.noise_floor_sigmas = get_double(*v, "analysis.noise_floor_sigmas");
  }
  if (const auto* t = section(root, "output")) {
    reject_unknown(*t, "output.", {"dir"});
    if (const auto* v = t->get("dir")) c.output_dir = get_string(*v, "output.dir");
  }
  if (const auto* t = section(root, "run")) {
    reject_unknown(*t, "run.", {"threads", "checkpoint_every"});
    if (const auto* v = t->get("threads")) c.threads = static_cast<int>(get_int(*v, "run.threads"));
    if (const auto* v = t->get("checkpoint_every")) c.checkpoint_every = get_int(*v, "run.checkpoint_every");
  }
  if (const auto* t = section(root, "oracle")) {
    reject_unknown(*t, "oracle.", {"delta", "tail", "compare_mc"});
    if (const auto* v = t->get("delta")) c.oracle_delta = get_double(*v, "oracle.delta");
    if (const auto* v = t->get("tail")) c.oracle_tail = get_double(*v, "oracle.tail");
    if (const auto* v = t->get("compare_mc")) c.oracle_compare_mc = get_bool(*v, "oracle.compare_mc");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("cannot read config: ") + e.what());
  }
  auto c = parse_config(text, path.string());
  // A relative output directory is taken relative to the config file.
  if (c.output_dir.is_relative()) c.output_dir = path.parent_path() / c.output_dir;
  return c;
}

int resolve_threads(std::optional<int> flag, const ExperimentConfig& config) {
  if (flag) {
    if (*flag < 1) throw Error(ErrorKind::Config, "--threads: must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("WETTINGSIM_THREADS"); env && *env) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), v);
    if (ec != std::errc{} || *ptr != '\0' || v < 1) {
      throw Error(ErrorKind::Config, std::string("WETTINGSIM_THREADS: expected a positive integer, got '") + env + "'");
    }
    return v;
  }
  if (config.threads > 0) return config.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string short_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string point_tag(double J, double K) { return "J" + short_number(J) + "_K" + short_number(K); }

}  // namespace wettingsim::cli
