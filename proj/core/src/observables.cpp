#include "wettingsim/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "wettingsim/error.hpp"
#include "wettingsim/io.hpp"

namespace wettingsim {

CorrelationAccumulator::CorrelationAccumulator(std::size_t n, int max_lag)
    : n_(n), max_lag_(max_lag < 0 ? -1 : clamp_lag(max_lag, n)), fft_(n), profile_sum_(n, 0.0), profile_sq_sum_(n, 0.0) {
  if (max_lag < 0) throw Error(ErrorKind::InvalidParams, "max_lag must be non-negative");
}

void CorrelationAccumulator::accumulate(std::span<const double> heights) {
  if (heights.size() != n_) {
    throw Error(ErrorKind::LengthMismatch, "configuration has " + std::to_string(heights.size()) +
                                               " sites, accumulator expects " + std::to_string(n_));
  }
  const std::size_t lags = static_cast<std::size_t>(max_lag_) + 1;
  const std::size_t offset = series_.size();
  series_.resize(offset + lags);
  fft_.autocovariance(heights, std::span<double>(series_).subspan(offset, lags));
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double h = heights[i];
    profile_sum_[i] += h;
    profile_sq_sum_[i] += h * h;
    sum += h;
  }
  mean_series_.push_back(sum / static_cast<double>(n_));
  ++count_;
}

std::span<const double> CorrelationAccumulator::measurement(std::int64_t t) const {
  if (t < 0 || t >= count_) throw Error(ErrorKind::InvalidParams, "measurement index out of range");
  const std::size_t lags = static_cast<std::size_t>(max_lag_) + 1;
  return std::span<const double>(series_).subspan(static_cast<std::size_t>(t) * lags, lags);
}

std::string CorrelationAccumulator::save_state() const {
  std::string out = "correlation-accumulator v1 n=" + std::to_string(n_) + " max_lag=" + std::to_string(max_lag_) +
                    " count=" + std::to_string(count_) + "\n";
  auto dump = [&out](std::span<const double> values) {
    for (double v : values) {
      out += io::format_double(v);
      out += '\n';
    }
  };
  dump(profile_sum_);
  dump(profile_sq_sum_);
  dump(mean_series_);
  dump(series_);
  return out;
}

void CorrelationAccumulator::restore_state(std::string_view state) {
  auto lines = io::split(state, '\n');
  if (lines.empty()) throw Error(ErrorKind::MalformedFile, "empty accumulator state");
  const std::string expected_prefix =
      "correlation-accumulator v1 n=" + std::to_string(n_) + " max_lag=" + std::to_string(max_lag_) + " count=";
  if (lines[0].substr(0, expected_prefix.size()) != expected_prefix) {
    throw Error(ErrorKind::MalformedFile, "accumulator state does not match this accumulator");
  }
  const auto count = io::parse_int(lines[0].substr(expected_prefix.size()));
  const std::size_t lags = static_cast<std::size_t>(max_lag_) + 1;
  const std::size_t needed = 2 * n_ + static_cast<std::size_t>(count) * (1 + lags);
  if (lines.size() < needed + 1) throw Error(ErrorKind::MalformedFile, "accumulator state truncated");
  std::size_t k = 1;
  for (auto& v : profile_sum_) v = io::parse_double(lines[k++]);
  for (auto& v : profile_sq_sum_) v = io::parse_double(lines[k++]);
  mean_series_.assign(static_cast<std::size_t>(count), 0.0);
  for (auto& v : mean_series_) v = io::parse_double(lines[k++]);
  series_.assign(static_cast<std::size_t>(count) * lags, 0.0);
  for (auto& v : series_) v = io::parse_double(lines[k++]);
  count_ = count;
}

double batch_means_error(std::span<const double> series, int batches) {
  const auto t = static_cast<std::int64_t>(series.size());
  if (t < 2) return 0.0;
  const std::int64_t b = std::min<std::int64_t>(batches, t);
  std::vector<double> means(static_cast<std::size_t>(b));
  for (std::int64_t k = 0; k < b; ++k) {
    const std::int64_t lo = k * t / b;
    const std::int64_t hi = (k + 1) * t / b;
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += series[static_cast<std::size_t>(i)];
    means[static_cast<std::size_t>(k)] = s / static_cast<double>(hi - lo);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

ObservableSummary finalize(const CorrelationAccumulator& acc) {
  const std::int64_t t = acc.count();
  if (t < 1) throw Error(ErrorKind::EmptyInput, "no measurements to finalize");
  const std::size_t n = acc.size();
  const auto inv_t = 1.0 / static_cast<double>(t);

  ObservableSummary out;
  out.mean_profile.resize(n);
  out.site_variance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = acc.profile_sum()[i] * inv_t;
    out.mean_profile[i] = mean;
    out.site_variance[i] = std::max(0.0, acc.profile_square_sum()[i] * inv_t - mean * mean);
  }

  const std::size_t lags = static_cast<std::size_t>(acc.max_lag()) + 1;
  auto& est = out.correlation;
  est.max_lag = acc.max_lag();
  est.f.assign(lags, 0.0);
  est.std_error.assign(lags, 0.0);
  est.n_measurements = t;
  est.n_replicas = 1;
  est.std_error_valid = t > 1;

  std::vector<double> column(static_cast<std::size_t>(t));
  for (std::size_t j = 0; j < lags; ++j) {
    double sum = 0.0;
    for (std::int64_t s = 0; s < t; ++s) {
      column[static_cast<std::size_t>(s)] = acc.measurement(s)[j];
      sum += column[static_cast<std::size_t>(s)];
    }
    est.f[j] = sum * inv_t;
    est.std_error[j] = batch_means_error(column);
  }

  for (std::int64_t s = 0; s < t; ++s) column[static_cast<std::size_t>(s)] = acc.spatial_mean(s);
  out.mean_height = std::accumulate(column.begin(), column.end(), 0.0) * inv_t;
  out.mean_height_error = batch_means_error(column);
  return out;
}

SpectrumEstimate psd(std::span<const double> heights) {
  const std::size_t n = heights.size();
  if (n == 0) throw Error(ErrorKind::InvalidSize, "empty height vector");
  SpectrumEstimate out;
  out.spacing = 1.0;
  out.length = static_cast<double>(n) * out.spacing;
  out.k.resize(n);
  out.psd.resize(n);
  FourierWorkspace ws(n);
  ws.power(heights, out.psd);
  // (a/L)^2 |X_m|^2 with a/L = 1/N.
  const double scale = (out.spacing / out.length) * (out.spacing / out.length);
  for (std::size_t m = 0; m < n; ++m) {
    out.k[m] = static_cast<double>(m) / out.length;
    out.psd[m] *= scale;
  }
  out.mean_height = std::accumulate(heights.begin(), heights.end(), 0.0) / static_cast<double>(n);
  return out;
}

CorrelationEstimate disorder_average(std::span<const CorrelationEstimate> estimates) {
  if (estimates.empty()) throw Error(ErrorKind::EmptyInput, "disorder average of zero replicas");
  const auto& first = estimates.front();
  for (const auto& e : estimates) {
    if (e.max_lag != first.max_lag || e.f.size() != first.f.size() || e.std_error.size() != first.f.size()) {
      throw Error(ErrorKind::LagMismatch, "replicas have different lag grids");
    }
  }
  const auto r = static_cast<double>(estimates.size());
  CorrelationEstimate out;
  out.max_lag = first.max_lag;
  out.f.assign(first.f.size(), 0.0);
  out.std_error.assign(first.f.size(), 0.0);
  out.n_replicas = 0;
  out.n_measurements = first.n_measurements;
  out.std_error_valid = estimates.size() > 1;
  for (const auto& e : estimates) {
    out.n_replicas += std::max<std::int64_t>(1, e.n_replicas);
    out.n_measurements = std::min(out.n_measurements, e.n_measurements);
    out.std_error_valid = out.std_error_valid || e.std_error_valid;
  }
  for (std::size_t j = 0; j < out.f.size(); ++j) {
    double mean = 0.0, within = 0.0;
    for (const auto& e : estimates) {
      mean += e.f[j];
      within += e.std_error[j];
    }
    mean /= r;
    within /= r;
    double between = 0.0;
    if (estimates.size() > 1) {
      double ss = 0.0;
      for (const auto& e : estimates) ss += (e.f[j] - mean) * (e.f[j] - mean);
      between = std::sqrt(ss / (r - 1.0) / r);
    }
    out.f[j] = mean;
    out.std_error[j] = std::hypot(between, within);
  }
  return out;
}

namespace {

void append_metadata(std::string& out, const Metadata& meta) {
  for (const auto& [key, value] : meta) out += "# " + key + "=" + value + "\n";
}

}  // namespace

std::string format_correlation_csv(const CorrelationEstimate& est, const Metadata& meta) {
  std::string out;
  append_metadata(out, meta);
  out += "j,f_mean,f_stderr,n_meas,n_replicas\n";
  for (std::size_t j = 0; j < est.f.size(); ++j) {
    out += std::to_string(j) + "," + io::format_double(est.f[j]) + "," + io::format_double(est.std_error[j]) + "," +
           std::to_string(est.n_measurements) + "," + std::to_string(est.n_replicas) + "\n";
  }
  return out;
}

const std::string* CorrelationTable::find(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

CorrelationTable parse_correlation_csv(std::string_view text) {
  CorrelationTable table;
  auto& est = table.estimate;
  bool header_seen = false;
  for (auto line : io::split(text, '\n')) {
    line = io::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = io::trim(line.substr(1));
      auto eq = body.find('=');
      if (eq != std::string_view::npos) table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      if (line != "j,f_mean,f_stderr,n_meas,n_replicas") {
        throw Error(ErrorKind::MalformedFile, "unexpected correlation CSV header '" + std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    auto cells = io::split(line, ',');
    if (cells.size() != 5) throw Error(ErrorKind::MalformedFile, "correlation CSV row needs 5 columns");
    const auto j = io::parse_int(cells[0]);
    if (j != static_cast<std::int64_t>(est.f.size())) {
      throw Error(ErrorKind::MalformedFile, "correlation CSV lags must be 0,1,2,...");
    }
    est.f.push_back(io::parse_double(cells[1]));
    est.std_error.push_back(io::parse_double(cells[2]));
    est.n_measurements = io::parse_int(cells[3]);
    est.n_replicas = io::parse_int(cells[4]);
  }
  if (!header_seen || est.f.empty()) throw Error(ErrorKind::MalformedFile, "correlation CSV has no data");
  est.max_lag = static_cast<int>(est.f.size()) - 1;
  est.std_error_valid = std::any_of(est.std_error.begin(), est.std_error.end(), [](double s) { return s > 0.0; });
  return table;
}

std::string format_profile_csv(std::span<const double> substrate, std::span<const double> mean_profile,
                               const Metadata& meta) {
  if (substrate.size() != mean_profile.size()) throw Error(ErrorKind::LengthMismatch, "profile length mismatch");
  std::string out;
  append_metadata(out, meta);
  out += "i,substrate,mean_height\n";
  for (std::size_t i = 0; i < substrate.size(); ++i) {
    out += std::to_string(i) + "," + io::format_double(substrate[i]) + "," + io::format_double(mean_profile[i]) + "\n";
  }
  return out;
}

std::string format_spectrum_csv(const SpectrumEstimate& spectrum, const Metadata& meta) {
  std::string out;
  append_metadata(out, meta);
  out += "m,k,psd\n";
  for (std::size_t m = 0; m < spectrum.psd.size(); ++m) {
    out += std::to_string(m) + "," + io::format_double(spectrum.k[m]) + "," + io::format_double(spectrum.psd[m]) + "\n";
  }
  return out;
}

}  // namespace wettingsim
