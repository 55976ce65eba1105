#include "wettingsim/correlation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numeric>

#include "wettingsim/error.hpp"

namespace wettingsim {

namespace {

// FFTW's planner is not re-entrant; plan creation and destruction must be serialised.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FourierWorkspace::Impl {
  std::size_t n = 0;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Impl(std::size_t size) : n(size) {
    const std::size_t half = n / 2 + 1;
    real = fftw_alloc_real(n);
    spectrum = fftw_alloc_complex(half);
    if (real == nullptr || spectrum == nullptr) {
      release();
      throw std::bad_alloc();
    }
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE keeps the plan (and thus every rounding) independent of timing.
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spectrum, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum, real, FFTW_ESTIMATE);
  }

  ~Impl() { release(); }

  void release() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (real) fftw_free(real);
    if (spectrum) fftw_free(spectrum);
    forward = backward = nullptr;
    real = nullptr;
    spectrum = nullptr;
  }
};

FourierWorkspace::FourierWorkspace(std::size_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidSize, "FFT length must be positive");
  impl_ = std::make_unique<Impl>(n);
}

FourierWorkspace::~FourierWorkspace() = default;
FourierWorkspace::FourierWorkspace(FourierWorkspace&&) noexcept = default;
FourierWorkspace& FourierWorkspace::operator=(FourierWorkspace&&) noexcept = default;

std::size_t FourierWorkspace::size() const noexcept { return impl_->n; }

void FourierWorkspace::autocovariance(std::span<const double> heights, std::span<double> out) {
  const std::size_t n = impl_->n;
  if (heights.size() != n) throw Error(ErrorKind::LengthMismatch, "autocovariance input length mismatch");
  const std::size_t lags = std::min(out.size(), n);
  const double mean = std::accumulate(heights.begin(), heights.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) impl_->real[i] = heights[i] - mean;
  fftw_execute(impl_->forward);
  const std::size_t half = n / 2 + 1;
  for (std::size_t m = 0; m < half; ++m) {
    const double re = impl_->spectrum[m][0];
    const double im = impl_->spectrum[m][1];
    impl_->spectrum[m][0] = re * re + im * im;
    impl_->spectrum[m][1] = 0.0;
  }
  fftw_execute(impl_->backward);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t j = 0; j < lags; ++j) out[j] = impl_->real[j] * scale;
  for (std::size_t j = lags; j < out.size(); ++j) out[j] = 0.0;
}

void FourierWorkspace::power(std::span<const double> heights, std::span<double> out) {
  const std::size_t n = impl_->n;
  if (heights.size() != n || out.size() != n) throw Error(ErrorKind::LengthMismatch, "power input length mismatch");
  std::copy(heights.begin(), heights.end(), impl_->real);
  fftw_execute(impl_->forward);
  for (std::size_t m = 0; m <= n / 2; ++m) {
    const double re = impl_->spectrum[m][0];
    const double im = impl_->spectrum[m][1];
    out[m] = re * re + im * im;
  }
  // Real input: |X_{n-m}| = |X_m|.
  for (std::size_t m = n / 2 + 1; m < n; ++m) out[m] = out[n - m];
}

std::vector<double> circular_autocovariance(std::span<const double> heights, int max_lag) {
  if (heights.empty()) throw Error(ErrorKind::InvalidSize, "empty height vector");
  if (max_lag < 0) throw Error(ErrorKind::InvalidParams, "max_lag must be non-negative");
  const int lag = clamp_lag(max_lag, heights.size());
  std::vector<double> out(static_cast<std::size_t>(lag) + 1);
  FourierWorkspace ws(heights.size());
  ws.autocovariance(heights, out);
  return out;
}

}  // namespace wettingsim
