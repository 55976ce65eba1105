#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wettingsim/correlation.hpp"
#include "wettingsim/mcmc.hpp"
#include "wettingsim/model.hpp"

namespace wettingsim {

inline constexpr int kDefaultMaxLag = 100;
inline constexpr int kBatchCount = 32;

/// Per-simulation running totals: the time-averaged profile and, for every
/// measurement, the circular spatial autocovariance
///   (1/N) sum_i h_i h_{i+j} - ((1/N) sum_i h_i)^2,  j = 0..max_lag.
/// The per-measurement series is retained so that finalize() can form batch means.
class CorrelationAccumulator final : public MeasurementSink {
 public:
  CorrelationAccumulator(std::size_t n, int max_lag = kDefaultMaxLag);

  void observe(const FieldConfig& c) override { accumulate(c.heights()); }
  void accumulate(const FieldConfig& c) { accumulate(c.heights()); }
  void accumulate(std::span<const double> heights);

  [[nodiscard]] std::string save_state() const override;
  void restore_state(std::string_view state) override;

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] int max_lag() const noexcept { return max_lag_; }
  [[nodiscard]] std::int64_t count() const noexcept { return count_; }
  [[nodiscard]] std::span<const double> profile_sum() const noexcept { return profile_sum_; }
  [[nodiscard]] std::span<const double> profile_square_sum() const noexcept { return profile_sq_sum_; }
  /// Spatial autocovariance of measurement t.
  [[nodiscard]] std::span<const double> measurement(std::int64_t t) const;
  /// Spatial mean height of measurement t.
  [[nodiscard]] double spatial_mean(std::int64_t t) const { return mean_series_.at(static_cast<std::size_t>(t)); }

 private:
  std::size_t n_;
  int max_lag_;
  FourierWorkspace fft_;
  std::vector<double> profile_sum_;
  std::vector<double> profile_sq_sum_;
  std::vector<double> series_;
  std::vector<double> mean_series_;
  std::int64_t count_ = 0;
};

struct ObservableSummary {
  std::vector<double> mean_profile;   // <h_i>
  std::vector<double> site_variance;  // <h_i^2> - <h_i>^2
  CorrelationEstimate correlation;
  double mean_height = 0.0;
  double mean_height_error = 0.0;
};

/// Measurement averages with batch-means (32 batches) standard errors. With a
/// single measurement the errors are zero and flagged invalid.
ObservableSummary finalize(const CorrelationAccumulator& acc);

/// Standard error of the mean of `series` from `batches` contiguous batch means.
/// Returns 0 for fewer than two samples.
double batch_means_error(std::span<const double> series, int batches = kBatchCount);

/// PSD(k) = |h_hat(k)|^2, h_hat(k) = (a/L) sum_n h_n exp(2 pi i n a k), a = 1,
/// at k_m = m / (N a), m = 0..N-1.
struct SpectrumEstimate {
  double spacing = 1.0;
  double length = 0.0;
  std::vector<double> k;
  std::vector<double> psd;
  double mean_height = 0.0;
};

SpectrumEstimate psd(std::span<const double> heights);
inline SpectrumEstimate psd(const FieldConfig& c) { return psd(c.heights()); }

/// Per-lag replica mean. The error combines the between-replica standard
/// error in quadrature with the mean within-replica error.
CorrelationEstimate disorder_average(std::span<const CorrelationEstimate> estimates);

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Correlation CSV: '# key=value' metadata lines, then
/// `j,f_mean,f_stderr,n_meas,n_replicas` and one row per lag.
std::string format_correlation_csv(const CorrelationEstimate& est, const Metadata& meta = {});

struct CorrelationTable {
  CorrelationEstimate estimate;
  Metadata metadata;

  [[nodiscard]] const std::string* find(std::string_view key) const;
};

CorrelationTable parse_correlation_csv(std::string_view text);

/// `i,substrate,mean_height`.
std::string format_profile_csv(std::span<const double> substrate, std::span<const double> mean_profile,
                               const Metadata& meta = {});
/// `m,k,psd`.
std::string format_spectrum_csv(const SpectrumEstimate& spectrum, const Metadata& meta = {});

}  // namespace wettingsim
