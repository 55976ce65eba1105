#include <string>

#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/mcmc.hpp"
#include "wettingsim/rng.hpp"

namespace wettingsim {

namespace {

constexpr std::string_view kCheckpointMagic = "# wettingsim-checkpoint v1";

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view line() {
    auto pos = text_.find('\n');
    if (pos == std::string_view::npos) throw Error(ErrorKind::MalformedFile, "checkpoint truncated");
    auto out = text_.substr(0, pos);
    text_.remove_prefix(pos + 1);
    return out;
  }

  std::string_view bytes(std::size_t count) {
    if (text_.size() < count + 1) throw Error(ErrorKind::MalformedFile, "checkpoint truncated");
    auto out = text_.substr(0, count);
    text_.remove_prefix(count);
    if (text_.front() != '\n') throw Error(ErrorKind::MalformedFile, "checkpoint block not terminated");
    text_.remove_prefix(1);
    return out;
  }

  // "tag k1=v1 k2=v2" -> value of `key`.
  static std::string_view field(std::string_view line, std::string_view tag, std::string_view key) {
    auto parts = io::split(line, ' ');
    if (parts.empty() || parts[0] != tag) {
      throw Error(ErrorKind::MalformedFile, "expected '" + std::string(tag) + "' record in checkpoint");
    }
    for (std::size_t k = 1; k < parts.size(); ++k) {
      auto eq = parts[k].find('=');
      if (eq != std::string_view::npos && parts[k].substr(0, eq) == key) return parts[k].substr(eq + 1);
    }
    throw Error(ErrorKind::MalformedFile, "checkpoint record '" + std::string(tag) + "' lacks " + std::string(key));
  }

 private:
  std::string_view text_;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  const auto& s = *cp.substrate;
  std::string out;
  out += kCheckpointMagic;
  out += '\n';
  out += "substrate seed=" + std::to_string(s.seed) + " generator=" + s.generator_id + " n=" +
         std::to_string(s.size()) + " distribution=" + std::string(to_string(s.distribution)) + '\n';
  out += "params J=" + io::format_double(cp.params.coupling) + " K=" + io::format_double(cp.params.pressure) + '\n';
  out += "schedule therm=" + std::to_string(cp.schedule.thermalization_sweeps) +
         " every=" + std::to_string(cp.schedule.measure_every) + " T=" + std::to_string(cp.schedule.n_measurements) +
         '\n';
  out += "rng generator=" + std::string(kGeneratorId) + " master=" + std::to_string(cp.seed.master) +
         " sweep=" + std::to_string(cp.next_sweep) + '\n';
  out += "measurements done=" + std::to_string(cp.measurements_done) + '\n';
  out += "heights n=" + std::to_string(cp.heights.size()) + '\n';
  for (double h : cp.heights) {
    out += io::format_double(h);
    out += '\n';
  }
  out += "sinks count=" + std::to_string(cp.sink_states.size()) + '\n';
  for (const auto& state : cp.sink_states) {
    out += "sink bytes=" + std::to_string(state.size()) + '\n';
    out += state;
    out += '\n';
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  LineReader in(text);
  if (in.line() != kCheckpointMagic) throw Error(ErrorKind::MalformedFile, "not a wettingsim checkpoint");

  Checkpoint cp;
  const auto sub = in.line();
  const auto generator = LineReader::field(sub, "substrate", "generator");
  if (generator != kGeneratorId) {
    throw Error(ErrorKind::MalformedFile, "checkpoint substrate uses unknown generator " + std::string(generator));
  }
  const auto seed = io::parse_u64(LineReader::field(sub, "substrate", "seed"));
  const auto n = io::parse_int(LineReader::field(sub, "substrate", "n"));
  const auto dist = parse_distribution(LineReader::field(sub, "substrate", "distribution"));
  cp.substrate = std::make_shared<const SubstrateSample>(generate_substrate(static_cast<std::size_t>(n), seed, dist));

  const auto params = in.line();
  cp.params.coupling = io::parse_double(LineReader::field(params, "params", "J"));
  cp.params.pressure = io::parse_double(LineReader::field(params, "params", "K"));

  const auto sched = in.line();
  cp.schedule.thermalization_sweeps = io::parse_int(LineReader::field(sched, "schedule", "therm"));
  cp.schedule.measure_every = io::parse_int(LineReader::field(sched, "schedule", "every"));
  cp.schedule.n_measurements = io::parse_int(LineReader::field(sched, "schedule", "T"));

  const auto rng = in.line();
  if (LineReader::field(rng, "rng", "generator") != kGeneratorId) {
    throw Error(ErrorKind::MalformedFile, "checkpoint dynamics use an unknown generator");
  }
  cp.seed.master = io::parse_u64(LineReader::field(rng, "rng", "master"));
  cp.next_sweep = io::parse_int(LineReader::field(rng, "rng", "sweep"));
  cp.measurements_done = io::parse_int(LineReader::field(in.line(), "measurements", "done"));

  const auto count = io::parse_int(LineReader::field(in.line(), "heights", "n"));
  if (count != n) throw Error(ErrorKind::MalformedFile, "checkpoint height count differs from substrate size");
  cp.heights.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) cp.heights.push_back(io::parse_double(in.line()));

  const auto n_sinks = io::parse_int(LineReader::field(in.line(), "sinks", "count"));
  for (std::int64_t k = 0; k < n_sinks; ++k) {
    const auto bytes = io::parse_int(LineReader::field(in.line(), "sink", "bytes"));
    cp.sink_states.emplace_back(in.bytes(static_cast<std::size_t>(bytes)));
  }
  if (in.line() != "end") throw Error(ErrorKind::MalformedFile, "checkpoint missing end marker");
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_checkpoint(cp));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(io::read_file(path)); }

}  // namespace wettingsim
