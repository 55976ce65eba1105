#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "wettingsim/substrate.hpp"

namespace wettingsim {

/// Coupling J (energy per unit height difference) and pressure K (energy per
/// unit height). Temperature is fixed at kT = 1 and absorbed into both.
struct ModelParams {
  double coupling = 1.0;
  double pressure = 0.1;

  static constexpr double kT = 1.0;

  /// Throws InvalidParams unless J >= 0 and K > 0 (both finite).
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Film heights on a periodic ring over a shared, immutable substrate.
/// Invariant: heights[i] >= substrate.heights[i].
class FieldConfig {
 public:
  FieldConfig(std::shared_ptr<const SubstrateSample> substrate, std::vector<double> heights);

  [[nodiscard]] std::size_t size() const noexcept { return heights_.size(); }
  [[nodiscard]] std::span<const double> heights() const noexcept { return heights_; }
  [[nodiscard]] const SubstrateSample& substrate() const noexcept { return *substrate_; }
  [[nodiscard]] const std::shared_ptr<const SubstrateSample>& substrate_ptr() const noexcept { return substrate_; }

  // Writers must keep heights at or above the substrate.
  [[nodiscard]] std::span<double> mutable_heights() noexcept { return heights_; }

  friend bool operator==(const FieldConfig& a, const FieldConfig& b) {
    return a.heights_ == b.heights_ && *a.substrate_ == *b.substrate_;
  }

 private:
  std::shared_ptr<const SubstrateSample> substrate_;
  std::vector<double> heights_;
};

/// H = J sum_i |h_{i+1} - h_i| + K sum_i h_i, indices mod n, each bond once.
double total_energy(const FieldConfig& c, const ModelParams& p);

/// sum_i (h_i - h^1_i).
double film_volume(const FieldConfig& c);

/// Unnormalised density exp(g(h)) on [floor, inf) where g is piecewise linear
/// and concave. Weights are kept in log form so that large J*height products
/// never overflow.
class PiecewiseExpDensity {
 public:
  static constexpr int kMaxPieces = 3;

  struct Piece {
    double start = 0.0;
    double width = 0.0;  // +inf for the last piece
    double log_slope = 0.0;
    double log_density_at_start = 0.0;
    double log_mass = 0.0;
  };

  /// exp(-J sum_a |h - a| - K h) restricted to h >= floor, for up to two anchors.
  static PiecewiseExpDensity from_anchors(double coupling, double pressure, double floor,
                                          std::span<const double> anchors);

  [[nodiscard]] std::span<const Piece> pieces() const noexcept { return {pieces_.data(), count_}; }
  [[nodiscard]] double floor() const noexcept { return floor_; }
  [[nodiscard]] double log_total_mass() const noexcept { return log_total_; }

  [[nodiscard]] double log_density(double h) const noexcept;
  [[nodiscard]] double pdf(double h) const noexcept;
  [[nodiscard]] double cdf(double h) const noexcept;
  /// Inverse CDF. u is clamped into [0, 1).
  [[nodiscard]] double quantile(double u) const noexcept;

 private:
  std::array<Piece, kMaxPieces> pieces_{};
  std::size_t count_ = 0;
  double floor_ = 0.0;
  double log_total_ = 0.0;
};

/// Single-site conditional of the Hamiltonian given both ring neighbours.
PiecewiseExpDensity local_conditional(const ModelParams& p, double left, double right, double floor);

/// Transition density of the open chain: exp(-J|h - previous| - K h) on h >= floor.
PiecewiseExpDensity chain_transition(const ModelParams& p, double previous, double floor);

/// Heat-bath sampler for the two-neighbour conditional used by the sweeps.
/// Draws from the same law as local_conditional(p, left, right, floor).quantile(u)
/// (equal up to rounding) but anchors piece weights at the mode of the
/// log-concave density, so every relative weight is <= 1 and a draw costs at
/// most two exponentials and one logarithm.
class LocalHeatBath {
 public:
  explicit LocalHeatBath(const ModelParams& p);

  [[nodiscard]] double draw(double left, double right, double floor, double u) const noexcept;

 private:
  double pressure_;
  double rise_;  // 2J - K, slope below both neighbours
  double fall_;  // 2J + K, slope above both neighbours
};

namespace detail {

/// e = exp(-x) and 1 - e for x >= 0, each to full relative precision.
inline void decay_pair(double x, double& e, double& one_minus_e) noexcept {
  if (x > 0.6931471805599453) {
    e = std::exp(-x);
    one_minus_e = 1.0 - e;
  } else {
    one_minus_e = -std::expm1(-x);
    e = 1.0 - one_minus_e;
  }
}

/// log of integral_0^width exp(slope * x) dx; width may be +inf when slope < 0.
double log_exp_integral(double slope, double width) noexcept;

}  // namespace detail

inline double LocalHeatBath::draw(double left, double right, double floor, double u) const noexcept {
  constexpr double kFlat = 1e-12;
  const double lo = left < right ? left : right;
  const double hi = left < right ? right : left;
  if (floor >= hi) return floor - std::log1p(-u) / fall_;

  // Pieces [floor, lo), [mid, hi), [hi, inf) with mid = max(floor, lo).
  double w_rise = 0.0;
  double e_rise = 1.0;
  double one_minus_e_rise = 0.0;
  double scale = 1.0;  // density at mid relative to the anchor of the first piece
  const double mid = floor > lo ? floor : lo;
  if (floor < lo) {
    const double width = lo - floor;
    if (rise_ > kFlat) {
      // Anchored at lo, the mode.
      detail::decay_pair(rise_ * width, e_rise, one_minus_e_rise);
      w_rise = one_minus_e_rise / rise_;
    } else if (rise_ < -kFlat) {
      // Decreasing already: the mode is the floor.
      detail::decay_pair(-rise_ * width, e_rise, one_minus_e_rise);
      w_rise = one_minus_e_rise / -rise_;
      scale = e_rise;
    } else {
      w_rise = width;
    }
  }
  double e_mid, one_minus_e_mid;
  detail::decay_pair(pressure_ * (hi - mid), e_mid, one_minus_e_mid);
  const double w_mid = scale * one_minus_e_mid / pressure_;
  const double w_top = scale * e_mid / fall_;

  double t = u * (w_rise + w_mid + w_top);
  double h;
  if (t < w_rise) {
    const double v = t / w_rise;
    if (rise_ > kFlat) {
      h = lo + std::log(e_rise + v * one_minus_e_rise) / rise_;
    } else if (rise_ < -kFlat) {
      h = floor + std::log1p(-v * one_minus_e_rise) / rise_;
    } else {
      h = floor + v * (lo - floor);
    }
  } else if ((t -= w_rise) < w_mid) {
    h = mid - std::log1p(-(t / w_mid) * one_minus_e_mid) / pressure_;
  } else {
    // Mass left above h, taken from 1 - u to avoid cancellation deep in the tail.
    double above = w_top > 0.0 ? (1.0 - u) * (w_rise + w_mid + w_top) / w_top : 1.0;
    if (above > 1.0) above = 1.0;
    h = hi - std::log(above) / fall_;
  }
  return h < floor ? floor : h;
}

}  // namespace wettingsim
