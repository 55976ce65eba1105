#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace wettingsim {

/// Lagged autocovariance f(j), j = 0..max_lag, with per-lag standard errors.
struct CorrelationEstimate {
  int max_lag = 0;
  std::vector<double> f;
  std::vector<double> std_error;
  std::int64_t n_measurements = 0;
  std::int64_t n_replicas = 0;
  // False when no error estimate exists (a single measurement); std_error is then all zero.
  bool std_error_valid = false;

  [[nodiscard]] std::size_t size() const noexcept { return f.size(); }
};

/// Reusable FFT workspace for one transform length. Owns an FFTW plan pair.
/// Not safe to share between threads; create one per accumulator.
class FourierWorkspace {
 public:
  explicit FourierWorkspace(std::size_t n);
  ~FourierWorkspace();
  FourierWorkspace(FourierWorkspace&&) noexcept;
  FourierWorkspace& operator=(FourierWorkspace&&) noexcept;
  FourierWorkspace(const FourierWorkspace&) = delete;
  FourierWorkspace& operator=(const FourierWorkspace&) = delete;

  [[nodiscard]] std::size_t size() const noexcept;

  /// Circular autocovariance (1/n) sum_i d_i d_{i+j}, d = h - mean(h), for
  /// lags 0..max_lag (clamped to n-1). Writes max_lag+1 values into `out`.
  void autocovariance(std::span<const double> heights, std::span<double> out);

  /// Squared moduli |X_m|^2 of the unnormalised DFT, m = 0..n-1.
  void power(std::span<const double> heights, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot circular autocovariance through the FFT.
std::vector<double> circular_autocovariance(std::span<const double> heights, int max_lag);

/// Largest lag that is meaningful for a ring of n sites.
inline int clamp_lag(int max_lag, std::size_t n) noexcept {
  const auto cap = static_cast<int>(n) - 1;
  return max_lag < cap ? max_lag : cap;
}

}  // namespace wettingsim
