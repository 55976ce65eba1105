#pragma once

#include <span>
#include <utility>
#include <vector>

#include "wettingsim/correlation.hpp"

namespace wettingsim {

struct FitRange {
  int lo = 0;
  int hi = 100;
};

struct FitOptions {
  // Lags with f(j) < noise_floor_sigmas * stderr(j) are dropped; 0 disables the cut.
  double noise_floor_sigmas = 3.0;
  int max_iterations = 200;
  double tolerance = 1e-10;
};

/// f(j) ~ a exp(-(j/b)^c).
struct StretchedExpFit {
  double amplitude = 0.0;
  double length = 0.0;
  double exponent = 0.0;
  double rms_residual = 0.0;  // unweighted, over the lags used
  FitRange range;
  int points_used = 0;
  int iterations = 0;
  bool converged = false;

  [[nodiscard]] double value(double j) const;
};

/// Weighted least squares (weights 1/stderr^2, unit weights when no errors are
/// available) by damped Gauss-Newton in (ln a, ln b, ln c).
StretchedExpFit fit_stretched_exp(const CorrelationEstimate& f, FitRange range, const FitOptions& options = {});

/// b ((c-1)/c)^(1/c) for c > 1, else 0.
double inflection_point(const StretchedExpFit& fit);

/// Independent fits on [0, b] and (b, max_lag].
std::pair<StretchedExpFit, StretchedExpFit> split_range_fits(const CorrelationEstimate& f, double b,
                                                             const FitOptions& options = {});

struct CommonPoint {
  double lag = 0.0;
  double value = 0.0;
  double dispersion = 0.0;  // standard deviation of the pairwise crossings
  int pairs_used = 0;
};

/// Median crossing of all curve pairs (first sign change of the difference,
/// linearly interpolated). Pairs that never cross are skipped.
CommonPoint common_point(std::span<const CorrelationEstimate> curves, std::span<const double> labels);

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares of log(value) against log(K).
PowerLawFit scaling_exponent(std::span<const std::pair<double, double>> points);

}  // namespace wettingsim
