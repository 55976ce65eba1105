#include "wettingsim/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "wettingsim/error.hpp"

namespace wettingsim {

namespace {

struct Sample {
  double lag;
  double value;
  double weight;
};

std::vector<Sample> usable_samples(const CorrelationEstimate& f, FitRange range, const FitOptions& options) {
  const bool weighted = f.std_error_valid && f.std_error.size() == f.f.size();
  std::vector<Sample> out;
  const int hi = std::min(range.hi, static_cast<int>(f.f.size()) - 1);
  for (int j = std::max(0, range.lo); j <= hi; ++j) {
    const double v = f.f[static_cast<std::size_t>(j)];
    if (!(v > 0.0)) continue;
    double w = 1.0;
    if (weighted) {
      const double s = f.std_error[static_cast<std::size_t>(j)];
      if (options.noise_floor_sigmas > 0.0 && v < options.noise_floor_sigmas * s) continue;
      if (s > 0.0) w = 1.0 / (s * s);
    }
    out.push_back({static_cast<double>(j), v, w});
  }
  if (weighted) {
    // Lags with zero error (e.g. a deterministic f) fall back to unit weight for all points.
    const bool any_zero = std::any_of(f.std_error.begin(), f.std_error.end(), [](double s) { return !(s > 0.0); });
    if (any_zero) {
      for (auto& s : out) s.weight = 1.0;
    }
  }
  return out;
}

struct Evaluation {
  double cost = 0.0;
  Eigen::MatrixXd jacobian;  // of weighted residuals w.r.t. (ln a, ln b, ln c)
  Eigen::VectorXd residual;  // sqrt(w) (f - model)
};

double model_value(const Eigen::Vector3d& theta, double lag) {
  const double a = std::exp(theta[0]);
  if (lag <= 0.0) return a;
  const double b = std::exp(theta[1]);
  const double c = std::exp(theta[2]);
  return a * std::exp(-std::pow(lag / b, c));
}

double cost_of(const Eigen::Vector3d& theta, const std::vector<Sample>& samples) {
  double cost = 0.0;
  for (const auto& s : samples) {
    const double r = s.value - model_value(theta, s.lag);
    cost += s.weight * r * r;
  }
  return cost;
}

Evaluation evaluate(const Eigen::Vector3d& theta, const std::vector<Sample>& samples) {
  const auto m = static_cast<Eigen::Index>(samples.size());
  Evaluation ev;
  ev.jacobian.resize(m, 3);
  ev.residual.resize(m);
  const double a = std::exp(theta[0]);
  const double b = std::exp(theta[1]);
  const double c = std::exp(theta[2]);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k)];
    const double sw = std::sqrt(s.weight);
    double model = a, d_lnb = 0.0, d_lnc = 0.0;
    if (s.lag > 0.0) {
      const double log_x = std::log(s.lag / b);
      const double z = std::exp(c * log_x);  // (j/b)^c
      model = a * std::exp(-z);
      d_lnb = model * c * z;
      d_lnc = -model * z * c * log_x;
    }
    ev.residual[k] = sw * (s.value - model);
    // Jacobian of the model, scaled by sqrt(w); residual = sw (f - model).
    ev.jacobian(k, 0) = sw * model;
    ev.jacobian(k, 1) = sw * d_lnb;
    ev.jacobian(k, 2) = sw * d_lnc;
  }
  ev.cost = ev.residual.squaredNorm();
  return ev;
}

// Initial length: first lag where f drops to f(0)/e, linearly interpolated.
double initial_length(const CorrelationEstimate& f) {
  const double target = f.f.front() / std::exp(1.0);
  for (std::size_t j = 1; j < f.f.size(); ++j) {
    if (f.f[j] <= target) {
      const double prev = f.f[j - 1];
      const double frac = (prev - target) / (prev - f.f[j]);
      return std::max(0.5, static_cast<double>(j - 1) + frac);
    }
  }
  return std::max(1.0, static_cast<double>(f.f.size() - 1));
}

}  // namespace

double StretchedExpFit::value(double j) const {
  if (j <= 0.0) return amplitude;
  return amplitude * std::exp(-std::pow(j / length, exponent));
}

StretchedExpFit fit_stretched_exp(const CorrelationEstimate& f, FitRange range, const FitOptions& options) {
  const auto samples = usable_samples(f, range, options);
  if (samples.size() < 4) {
    throw Error(ErrorKind::TooFewPoints, "stretched-exponential fit needs >= 4 usable lags in [" +
                                             std::to_string(range.lo) + ", " + std::to_string(range.hi) + "], found " +
                                             std::to_string(samples.size()));
  }

  double a0 = f.f.front();
  if (!(a0 > 0.0)) a0 = samples.front().value;
  Eigen::Vector3d theta(std::log(a0), std::log(f.f.front() > 0.0 ? initial_length(f) : 1.0), 0.0);

  StretchedExpFit out;
  out.range = range;
  out.points_used = static_cast<int>(samples.size());

  Evaluation ev = evaluate(theta, samples);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations && !converged; ++iter) {
    // Solve min |J step - r| via column-pivoting QR.
    Eigen::Vector3d step = ev.jacobian.colPivHouseholderQr().solve(ev.residual);
    if (!step.allFinite()) break;
    double damping = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Eigen::Vector3d trial = theta + damping * step;
      const double trial_cost = cost_of(trial, samples);
      if (std::isfinite(trial_cost) && trial_cost <= ev.cost) {
        theta = trial;
        accepted = true;
        break;
      }
      damping *= 0.5;
    }
    const double change = (damping * step).cwiseAbs().maxCoeff();
    if (!accepted) {
      // No descent along the Gauss-Newton direction: a stationary point to rounding.
      converged = step.cwiseAbs().maxCoeff() < 1e-6;
      break;
    }
    ev = evaluate(theta, samples);
    // Log-parameter steps are relative parameter changes.
    if (change < options.tolerance || ev.cost == 0.0) converged = true;
  }

  out.amplitude = std::exp(theta[0]);
  out.length = std::exp(theta[1]);
  out.exponent = std::exp(theta[2]);
  out.iterations = iter;
  out.converged = converged;
  double ss = 0.0;
  for (const auto& s : samples) {
    const double r = s.value - out.value(s.lag);
    ss += r * r;
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(samples.size()));
  return out;
}

double inflection_point(const StretchedExpFit& fit) {
  const double c = fit.exponent;
  if (!(c > 1.0)) return 0.0;
  return fit.length * std::pow((c - 1.0) / c, 1.0 / c);
}

std::pair<StretchedExpFit, StretchedExpFit> split_range_fits(const CorrelationEstimate& f, double b,
                                                             const FitOptions& options) {
  if (!(b >= 0.0)) throw Error(ErrorKind::InvalidParams, "split point must be non-negative");
  const int split = static_cast<int>(std::floor(b));
  auto low = fit_stretched_exp(f, FitRange{0, split}, options);
  auto high = fit_stretched_exp(f, FitRange{split + 1, f.max_lag}, options);
  return {low, high};
}

namespace {

double interpolate(const std::vector<double>& values, double lag) {
  const auto last = static_cast<double>(values.size() - 1);
  if (lag <= 0.0) return values.front();
  if (lag >= last) return values.back();
  const auto j = static_cast<std::size_t>(std::floor(lag));
  const double frac = lag - static_cast<double>(j);
  return values[j] + frac * (values[j + 1] - values[j]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// First sign change of d over the lag grid, with runs of exact zeros crossed at their midpoint.
bool first_crossing(const std::vector<double>& d, double& lag) {
  int prev = -1;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] == 0.0) continue;
    if (prev >= 0 && (d[j] > 0.0) != (d[static_cast<std::size_t>(prev)] > 0.0)) {
      const auto p = static_cast<std::size_t>(prev);
      if (j == p + 1) {
        lag = static_cast<double>(p) + d[p] / (d[p] - d[j]);
      } else {
        lag = 0.5 * static_cast<double>(p + 1 + j - 1);
      }
      return true;
    }
    prev = static_cast<int>(j);
  }
  return false;
}

}  // namespace

CommonPoint common_point(std::span<const CorrelationEstimate> curves, std::span<const double> labels) {
  if (curves.size() < 2) throw Error(ErrorKind::TooFewPoints, "common point needs at least two curves");
  if (!labels.empty() && labels.size() != curves.size()) {
    throw Error(ErrorKind::LengthMismatch, "one label per curve expected");
  }
  for (const auto& c : curves) {
    if (c.f.size() != curves.front().f.size()) throw Error(ErrorKind::LagMismatch, "curves use different lag grids");
  }
  std::vector<double> crossings;
  std::vector<double> diff(curves.front().f.size());
  for (std::size_t p = 0; p < curves.size(); ++p) {
    for (std::size_t q = p + 1; q < curves.size(); ++q) {
      for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = curves[p].f[j] - curves[q].f[j];
      double lag = 0.0;
      if (first_crossing(diff, lag)) crossings.push_back(lag);
    }
  }
  if (crossings.empty()) throw Error(ErrorKind::NoCrossing, "no pair of curves crosses on the lag grid");

  CommonPoint out;
  out.pairs_used = static_cast<int>(crossings.size());
  out.lag = median(crossings);
  std::vector<double> values;
  for (const auto& c : curves) values.push_back(interpolate(c.f, out.lag));
  out.value = median(values);
  double mean = 0.0;
  for (double x : crossings) mean += x;
  mean /= static_cast<double>(crossings.size());
  double ss = 0.0;
  for (double x : crossings) ss += (x - mean) * (x - mean);
  out.dispersion = std::sqrt(ss / static_cast<double>(crossings.size()));
  return out;
}

PowerLawFit scaling_exponent(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw Error(ErrorKind::TooFewPoints, "scaling fit needs at least 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [k, v] : points) {
    if (!(k > 0.0) || !(v > 0.0)) throw Error(ErrorKind::NonPositiveInput, "scaling fit needs positive K and values");
    sx += std::log(k);
    sy += std::log(v);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [k, v] : points) {
    const double dx = std::log(k) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::InvalidParams, "scaling fit needs at least two distinct K values");
  PowerLawFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0.0;
  for (const auto& [k, v] : points) {
    const double r = std::log(v) - (out.intercept + out.slope * std::log(k));
    rss += r * r;
  }
  out.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return out;
}

}  // namespace wettingsim
