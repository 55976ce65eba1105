#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "wettingsim/cli/commands.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"
#include "wettingsim/version.hpp"

namespace wettingsim::cli {

namespace fs = std::filesystem;

namespace {

double meta_double(const CorrelationTable& t, std::string_view key, double fallback) {
  const auto* v = t.find(key);
  return v ? io::parse_double(*v) : fallback;
}

int meta_int(const CorrelationTable& t, std::string_view key, int fallback) {
  const auto* v = t.find(key);
  return v ? static_cast<int>(io::parse_int(*v)) : fallback;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string csv_number(const std::optional<double>& v) { return v ? io::format_double(*v) : "nan"; }

}  // namespace

int FitBatch::failures() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.fit; }));
}

FitRecord fit_correlation_table(const CorrelationTable& table, const FitOptions& options) {
  FitRecord rec;
  rec.J = meta_double(table, "J", std::numeric_limits<double>::quiet_NaN());
  rec.K = meta_double(table, "K", std::numeric_limits<double>::quiet_NaN());
  rec.mean_thickness = meta_double(table, "mean_thickness", std::numeric_limits<double>::quiet_NaN());
  const FitRange range{meta_int(table, "fit_lo", 0), meta_int(table, "fit_hi", 100)};
  FitOptions opts = options;
  opts.noise_floor_sigmas = meta_double(table, "noise_floor_sigmas", options.noise_floor_sigmas);
  try {
    rec.fit = fit_stretched_exp(table.estimate, range, opts);
  } catch (const Error& e) {
    rec.error = e.what();
    return rec;
  }
  rec.inflection = inflection_point(*rec.fit);
  const int split = static_cast<int>(std::floor(rec.fit->length));
  try {
    rec.c_low = fit_stretched_exp(table.estimate, FitRange{range.lo, std::min(split, range.hi)}, opts).exponent;
  } catch (const Error&) {
  }
  try {
    rec.c_high = fit_stretched_exp(table.estimate, FitRange{std::max(split + 1, range.lo), range.hi}, opts).exponent;
  } catch (const Error&) {
  }
  return rec;
}

FitBatch run_fit(const fs::path& in, const fs::path& out, std::ostream& log) {
  if (!fs::is_directory(in)) throw Error(ErrorKind::Io, "input directory " + in.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("correlation_") && name.ends_with(".csv")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no correlation_*.csv files in " + in.string());
  fs::create_directories(out);

  FitBatch batch;
  std::set<std::string> hashes;
  std::map<std::string, CorrelationEstimate> curves;  // by tag, for the common point
  for (const auto& path : files) {
    FitRecord rec;
    rec.source = path;
    try {
      const auto table = parse_correlation_csv(io::read_file(path));
      if (const auto* h = table.find("config_hash")) hashes.insert(*h);
      rec = fit_correlation_table(table, {});
      rec.source = path;
      if (rec.fit) curves[point_tag(rec.J, rec.K)] = table.estimate;
    } catch (const Error& e) {
      rec.error = e.what();
    }

    nlohmann::json j;
    j["J"] = rec.J;
    j["K"] = rec.K;
    if (rec.fit) {
      const auto& f = *rec.fit;
      j["a"] = f.amplitude;
      j["b"] = f.length;
      j["c"] = f.exponent;
      j["rms"] = f.rms_residual;
      j["range"] = {f.range.lo, f.range.hi};
      j["points_used"] = f.points_used;
      j["converged"] = f.converged;
    } else {
      j["a"] = j["b"] = j["c"] = j["rms"] = nullptr;
      j["range"] = nullptr;
      j["converged"] = false;
      j["error"] = rec.error;
    }
    j["c_low"] = optional_number(rec.c_low);
    j["c_high"] = optional_number(rec.c_high);
    j["inflection"] = rec.inflection;
    j["source"] = path.filename().string();
    j["version"] = kVersion;
    j["config_hash"] = hashes.size() == 1 ? *hashes.begin() : std::string("unknown");
    const std::string stem = path.stem().string().substr(std::string("correlation_").size());
    io::write_file_atomic(out / ("fit_" + stem + ".json"), j.dump(2) + "\n");

    if (rec.fit) {
      log << "  " << path.filename().string() << ": a=" << rec.fit->amplitude << " b=" << rec.fit->length
          << " c=" << rec.fit->exponent << (rec.fit->converged ? "" : " (not converged)") << '\n';
    } else {
      log << "  " << path.filename().string() << ": FAILED " << rec.error << '\n';
    }
    batch.records.push_back(std::move(rec));
  }

  const auto key = [](const FitRecord& r) {
    const auto finite = [](double x) { return std::isnan(x) ? std::numeric_limits<double>::infinity() : x; };
    return std::pair(finite(r.K), finite(r.J));
  };
  std::stable_sort(batch.records.begin(), batch.records.end(),
                   [&](const FitRecord& a, const FitRecord& b) { return key(a) < key(b); });

  const std::string hash = hashes.size() == 1 ? *hashes.begin() : "mixed";
  const std::string header = std::string("# version=") + kVersion + "\n# config_hash=" + hash + "\n";

  std::ostringstream summary;
  summary << header << "J,K,a,b,c,c_low,c_high,inflection,rms,converged,mean_thickness,source\n";
  for (const auto& r : batch.records) {
    summary << io::format_double(r.J) << ',' << io::format_double(r.K) << ',';
    if (r.fit) {
      summary << io::format_double(r.fit->amplitude) << ',' << io::format_double(r.fit->length) << ','
              << io::format_double(r.fit->exponent) << ',';
    } else {
      summary << "nan,nan,nan,";
    }
    summary << csv_number(r.c_low) << ',' << csv_number(r.c_high) << ',' << io::format_double(r.inflection) << ','
            << (r.fit ? io::format_double(r.fit->rms_residual) : "nan") << ','
            << (r.fit && r.fit->converged ? 1 : 0) << ',' << io::format_double(r.mean_thickness) << ','
            << r.source.filename().string() << '\n';
  }
  io::write_file_atomic(out / "fit_summary.csv", summary.str());

  // Common point across J at fixed K.
  std::map<double, std::vector<const FitRecord*>> by_k;
  std::map<double, std::vector<const FitRecord*>> by_j;
  for (const auto& r : batch.records) {
    if (!r.fit) continue;
    by_k[r.K].push_back(&r);
    by_j[r.J].push_back(&r);
  }
  std::ostringstream cp;
  cp << header << "K,j_star,f_star,dispersion,pairs,curves\n";
  for (const auto& [K, recs] : by_k) {
    if (recs.size() < 2) continue;
    std::vector<CorrelationEstimate> cs;
    std::vector<double> labels;
    for (const auto* r : recs) {
      cs.push_back(curves.at(point_tag(r->J, r->K)));
      labels.push_back(r->J);
    }
    cp << io::format_double(K) << ',';
    try {
      const auto point = common_point(cs, labels);
      cp << io::format_double(point.lag) << ',' << io::format_double(point.value) << ','
         << io::format_double(point.dispersion) << ',' << point.pairs_used;
    } catch (const Error&) {
      cp << "nan,nan,nan,0";
    }
    cp << ',' << recs.size() << '\n';
  }
  io::write_file_atomic(out / "common_point.csv", cp.str());

  // Power laws in K at fixed J.
  std::ostringstream sc;
  sc << header << "J,quantity,slope,intercept,slope_stderr,points\n";
  for (const auto& [J, recs] : by_j) {
    std::vector<std::pair<double, double>> b_pts, t_pts;
    for (const auto* r : recs) {
      b_pts.emplace_back(r->K, r->fit->length);
      if (std::isfinite(r->mean_thickness)) t_pts.emplace_back(r->K, r->mean_thickness);
    }
    for (const auto& [name, pts] : {std::pair{"b", &b_pts}, std::pair{"thickness", &t_pts}}) {
      try {
        const auto fit = scaling_exponent(*pts);
        sc << io::format_double(J) << ',' << name << ',' << io::format_double(fit.slope) << ','
           << io::format_double(fit.intercept) << ',' << io::format_double(fit.slope_stderr) << ',' << pts->size()
           << '\n';
      } catch (const Error&) {
      }
    }
  }
  io::write_file_atomic(out / "scaling.csv", sc.str());
  return batch;
}

}  // namespace wettingsim::cli
