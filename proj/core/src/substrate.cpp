#include "wettingsim/substrate.hpp"

#include <cmath>
#include <string>

#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/rng.hpp"

namespace wettingsim {

namespace {

constexpr std::string_view kMagic = "# wettingsim-substrate v1";

std::string_view next_line(std::string_view& text, bool& ok) {
  if (text.empty()) {
    ok = false;
    return {};
  }
  auto pos = text.find('\n');
  if (pos == std::string_view::npos) {
    // Every line, including the last, must be newline-terminated.
    ok = false;
    return {};
  }
  auto line = text.substr(0, pos);
  text.remove_prefix(pos + 1);
  ok = true;
  return line;
}

}  // namespace

std::string_view to_string(SubstrateDistribution d) noexcept {
  switch (d) {
    case SubstrateDistribution::ExpMeanOne: return "exp_mean_one";
    case SubstrateDistribution::FlatZero: return "flat_zero";
  }
  return "unknown";
}

SubstrateDistribution parse_distribution(std::string_view id) {
  if (id == "exp_mean_one") return SubstrateDistribution::ExpMeanOne;
  if (id == "flat_zero") return SubstrateDistribution::FlatZero;
  throw Error(ErrorKind::Config, "unknown substrate distribution '" + std::string(id) + "'");
}

SubstrateSample generate_substrate(std::size_t n, std::uint64_t seed, SubstrateDistribution distribution) {
  if (n < 2) throw Error(ErrorKind::InvalidSize, "substrate needs at least 2 sites, got " + std::to_string(n));
  SubstrateSample s;
  s.seed = seed;
  s.generator_id = kGeneratorId;
  s.distribution = distribution;
  s.heights.assign(n, 0.0);
  if (distribution == SubstrateDistribution::ExpMeanOne) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform_open_closed(stream_bits(seed, StreamDomain::Substrate, i, 0));
      s.heights[i] = -std::log(u);
    }
  }
  return s;
}

CorrelationEstimate substrate_autocovariance(const SubstrateSample& s, int max_lag) {
  CorrelationEstimate est;
  est.f = circular_autocovariance(s.heights, max_lag);
  est.max_lag = static_cast<int>(est.f.size()) - 1;
  est.std_error.assign(est.f.size(), 0.0);
  est.n_measurements = 1;
  est.n_replicas = 1;
  est.std_error_valid = false;
  return est;
}

std::string serialize_substrate(const SubstrateSample& s) {
  std::string body;
  body.reserve(s.size() * 24);
  for (double h : s.heights) {
    body += io::format_double(h);
    body += '\n';
  }
  std::string out;
  out.reserve(body.size() + 160);
  out += kMagic;
  out += '\n';
  out += "# seed=" + std::to_string(s.seed) + " generator=" + s.generator_id + " n=" + std::to_string(s.size()) +
         " distribution=" + std::string(to_string(s.distribution)) + " checksum=" + io::to_hex(io::fnv1a64(body)) +
         '\n';
  out += body;
  return out;
}

SubstrateSample parse_substrate(std::string_view text) {
  bool ok = false;
  auto magic = next_line(text, ok);
  if (!ok || magic != kMagic) throw Error(ErrorKind::MalformedFile, "missing substrate header");
  auto meta = next_line(text, ok);
  if (!ok || meta.substr(0, 2) != "# ") throw Error(ErrorKind::MalformedFile, "missing substrate metadata line");

  SubstrateSample s;
  std::int64_t n = -1;
  std::string checksum;
  bool have_seed = false, have_generator = false, have_distribution = false;
  for (auto field : io::split(meta.substr(2), ' ')) {
    if (field.empty()) continue;
    auto eq = field.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::MalformedFile, "bad metadata field");
    auto key = field.substr(0, eq);
    auto value = field.substr(eq + 1);
    if (key == "seed") {
      s.seed = io::parse_u64(value);
      have_seed = true;
    } else if (key == "generator") {
      s.generator_id = std::string(value);
      have_generator = true;
    } else if (key == "n") {
      n = io::parse_int(value);
    } else if (key == "distribution") {
      try {
        s.distribution = parse_distribution(value);
      } catch (const Error&) {
        throw Error(ErrorKind::MalformedFile, "unknown distribution in substrate file");
      }
      have_distribution = true;
    } else if (key == "checksum") {
      checksum = std::string(value);
    }
  }
  if (!have_seed || !have_generator || !have_distribution || n < 2 || checksum.empty()) {
    throw Error(ErrorKind::MalformedFile, "incomplete substrate metadata");
  }

  const std::string_view body = text;
  s.heights.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    auto line = next_line(text, ok);
    if (!ok) {
      throw Error(ErrorKind::MalformedFile,
                  "substrate file truncated at line " + std::to_string(i) + " of " + std::to_string(n));
    }
    const double h = io::parse_double(line);
    if (!(h >= 0.0) || !std::isfinite(h)) throw Error(ErrorKind::MalformedFile, "negative or non-finite height");
    s.heights.push_back(h);
  }
  if (!text.empty()) throw Error(ErrorKind::MalformedFile, "trailing data after substrate heights");
  if (io::to_hex(io::fnv1a64(body)) != checksum) {
    throw Error(ErrorKind::ChecksumMismatch, "substrate heights do not match recorded checksum " + checksum);
  }
  return s;
}

void save_substrate(const SubstrateSample& s, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_substrate(s));
}

SubstrateSample load_substrate(const std::filesystem::path& path) { return parse_substrate(io::read_file(path)); }

}  // namespace wettingsim
