#include "wettingsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wettingsim/error.hpp"

namespace wettingsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this |slope| a piece is integrated as flat with a first-order correction.
constexpr double kFlatSlope = 1e-12;

}  // namespace

void ModelParams::validate() const {
  if (!std::isfinite(coupling) || coupling < 0.0) {
    throw Error(ErrorKind::InvalidParams, "coupling J must be finite and >= 0, got " + std::to_string(coupling));
  }
  if (!std::isfinite(pressure) || pressure <= 0.0) {
    throw Error(ErrorKind::InvalidParams, "pressure K must be finite and > 0, got " + std::to_string(pressure));
  }
}

FieldConfig::FieldConfig(std::shared_ptr<const SubstrateSample> substrate, std::vector<double> heights)
    : substrate_(std::move(substrate)), heights_(std::move(heights)) {
  if (!substrate_) throw Error(ErrorKind::InvalidParams, "field configuration needs a substrate");
  if (heights_.size() != substrate_->size()) {
    throw Error(ErrorKind::LengthMismatch, "film has " + std::to_string(heights_.size()) + " sites, substrate has " +
                                               std::to_string(substrate_->size()));
  }
  for (std::size_t i = 0; i < heights_.size(); ++i) {
    if (!(heights_[i] >= substrate_->heights[i])) {
      throw Error(ErrorKind::InvalidParams, "film height below substrate at site " + std::to_string(i));
    }
  }
}

double total_energy(const FieldConfig& c, const ModelParams& p) {
  const auto h = c.heights();
  const std::size_t n = h.size();
  double gradient = 0.0;
  double volume = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1 == n) ? 0 : i + 1;
    gradient += std::abs(h[next] - h[i]);
    volume += h[i];
  }
  return p.coupling * gradient + p.pressure * volume;
}

double film_volume(const FieldConfig& c) {
  const auto h = c.heights();
  const auto& s = c.substrate().heights;
  double v = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) v += h[i] - s[i];
  return v;
}

double detail::log_exp_integral(double slope, double width) noexcept {
  if (std::isinf(width)) return -std::log(-slope);
  if (std::abs(slope) < kFlatSlope) return std::log(width) + std::log1p(0.5 * slope * width);
  if (slope > 0.0) return slope * width + std::log(-std::expm1(-slope * width)) - std::log(slope);
  return std::log(-std::expm1(slope * width)) - std::log(-slope);
}

namespace {

// Offset x in [0, width] with integral_0^x e^{slope t} dt = v * integral_0^width e^{slope t} dt.
double invert_piece(double slope, double width, double v) noexcept {
  double x;
  if (std::isinf(width)) {
    x = std::log1p(-v) / slope;
  } else if (std::abs(slope) < kFlatSlope) {
    x = v * width;
  } else if (slope > 0.0) {
    x = width + std::log(v + (1.0 - v) * std::exp(-slope * width)) / slope;
  } else {
    x = std::log1p(v * std::expm1(slope * width)) / slope;
  }
  if (!(x >= 0.0)) x = 0.0;
  if (x > width) x = width;
  return x;
}

}  // namespace

PiecewiseExpDensity PiecewiseExpDensity::from_anchors(double coupling, double pressure, double floor,
                                                      std::span<const double> anchors) {
  PiecewiseExpDensity d;
  d.floor_ = floor;

  std::array<double, 2> breaks{};
  std::size_t n_breaks = 0;
  for (double a : anchors) {
    if (a > floor) breaks[n_breaks++] = a;
  }
  if (n_breaks == 2) {
    if (breaks[0] > breaks[1]) std::swap(breaks[0], breaks[1]);
    if (breaks[0] == breaks[1]) n_breaks = 1;
  }

  auto log_weight = [&](double h) {
    double g = -pressure * h;
    for (double a : anchors) g -= coupling * std::abs(h - a);
    return g;
  };
  auto slope_on = [&](double start) {
    // Anchors strictly above the segment pull it up, the rest pull it down.
    double s = -pressure;
    for (double a : anchors) s += (a > start) ? coupling : -coupling;
    return s;
  };

  double start = floor;
  for (std::size_t b = 0; b <= n_breaks; ++b) {
    const double end = (b < n_breaks) ? breaks[b] : kInf;
    const double slope = slope_on(start);
    if (d.count_ > 0 && d.pieces_[d.count_ - 1].log_slope == slope) {
      // Same slope as the previous piece (J = 0): extend it.
      d.pieces_[d.count_ - 1].width = end - d.pieces_[d.count_ - 1].start;
    } else {
      d.pieces_[d.count_++] = Piece{start, end - start, slope, log_weight(start), 0.0};
    }
    start = end;
  }

  double max_log = -kInf;
  for (std::size_t k = 0; k < d.count_; ++k) {
    auto& piece = d.pieces_[k];
    piece.log_mass = piece.log_density_at_start + detail::log_exp_integral(piece.log_slope, piece.width);
    max_log = std::max(max_log, piece.log_mass);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < d.count_; ++k) sum += std::exp(d.pieces_[k].log_mass - max_log);
  d.log_total_ = max_log + std::log(sum);
  return d;
}

double PiecewiseExpDensity::log_density(double h) const noexcept {
  if (h < floor_) return -kInf;
  std::size_t k = 0;
  while (k + 1 < count_ && h >= pieces_[k + 1].start) ++k;
  const auto& piece = pieces_[k];
  return piece.log_density_at_start + piece.log_slope * (h - piece.start);
}

double PiecewiseExpDensity::pdf(double h) const noexcept {
  if (h < floor_) return 0.0;
  return std::exp(log_density(h) - log_total_);
}

double PiecewiseExpDensity::cdf(double h) const noexcept {
  if (h <= floor_) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < count_; ++k) {
    const auto& piece = pieces_[k];
    const double end = piece.start + piece.width;
    if (h >= end) {
      acc += std::exp(piece.log_mass - log_total_);
      continue;
    }
    const double partial = piece.log_density_at_start + detail::log_exp_integral(piece.log_slope, h - piece.start);
    acc += std::exp(partial - log_total_);
    break;
  }
  return std::min(acc, 1.0);
}

double PiecewiseExpDensity::quantile(double u) const noexcept {
  if (!(u > 0.0)) u = 0.0;
  if (u >= 1.0) u = std::nextafter(1.0, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < count_; ++k) {
    const auto& piece = pieces_[k];
    const double p = std::exp(piece.log_mass - log_total_);
    if (u < acc + p || k + 1 == count_) {
      double v = (u - acc) / p;
      v = std::clamp(v, 0.0, std::nextafter(1.0, 0.0));
      return piece.start + invert_piece(piece.log_slope, piece.width, v);
    }
    acc += p;
  }
  return floor_;
}

LocalHeatBath::LocalHeatBath(const ModelParams& p)
    : pressure_(p.pressure), rise_(2.0 * p.coupling - p.pressure), fall_(2.0 * p.coupling + p.pressure) {
  p.validate();
}

PiecewiseExpDensity local_conditional(const ModelParams& p, double left, double right, double floor) {
  if (!(p.pressure > 0.0)) throw Error(ErrorKind::InvalidParams, "pressure K must be > 0");
  const std::array<double, 2> anchors{left, right};
  return PiecewiseExpDensity::from_anchors(p.coupling, p.pressure, floor, anchors);
}

PiecewiseExpDensity chain_transition(const ModelParams& p, double previous, double floor) {
  if (!(p.pressure > 0.0)) throw Error(ErrorKind::InvalidParams, "pressure K must be > 0");
  const std::array<double, 1> anchors{previous};
  return PiecewiseExpDensity::from_anchors(p.coupling, p.pressure, floor, anchors);
}

}  // namespace wettingsim
