#include "wettingsim/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "wettingsim/error.hpp"

namespace wettingsim {

HeightGrid::HeightGrid(std::span<const double> floors, double delta, double h_max,
                       std::span<const double> extra_breakpoints, int refinement)
    : floors_(floors.begin(), floors.end()),
      extra_(extra_breakpoints.begin(), extra_breakpoints.end()),
      delta_(delta),
      h_max_(h_max),
      refinement_(refinement) {
  if (floors_.size() < 2) throw Error(ErrorKind::InvalidSize, "height grid needs at least two sites");
  if (!(delta_ > 0.0)) throw Error(ErrorKind::InvalidParams, "grid spacing must be positive");
  for (std::size_t i = 0; i < floors_.size(); ++i) {
    if (!(floors_[i] < h_max_)) {
      throw Error(ErrorKind::EmptyNodeSet,
                  "h_max " + std::to_string(h_max_) + " is not above the substrate at site " + std::to_string(i));
    }
  }

  std::vector<double> breaks(floors_);
  for (double x : extra_) {
    if (x < h_max_) breaks.push_back(x);
  }
  breaks.push_back(h_max_);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const long long split = 1LL << refinement_;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double lo = breaks[b], hi = breaks[b + 1];
    const auto base = std::max<long long>(1, static_cast<long long>(std::ceil((hi - lo) / delta_ - 1e-9)));
    const long long cells = base * split;
    for (long long c = 0; c < cells; ++c) {
      nodes_.push_back(lo + (hi - lo) * static_cast<double>(c) / static_cast<double>(cells));
    }
  }
  nodes_.push_back(breaks.back());

  first_node_.resize(floors_.size());
  weights_.resize(floors_.size());
  for (std::size_t i = 0; i < floors_.size(); ++i) {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), floors_[i]);
    first_node_[i] = static_cast<std::size_t>(it - nodes_.begin());
    const auto x = nodes(i);
    auto& w = weights_[i];
    w.assign(x.size(), 0.0);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      const double half = 0.5 * (x[k + 1] - x[k]);
      w[k] += half;
      w[k + 1] += half;
    }
  }
}

HeightGrid HeightGrid::for_model(const SubstrateSample& s, const ModelParams& p, double delta, double tail,
                                 std::span<const double> extra_breakpoints) {
  p.validate();
  if (tail < 10.0) throw Error(ErrorKind::InvalidParams, "grid cutoff must exceed the substrate by at least 10/K");
  const double top = *std::max_element(s.heights.begin(), s.heights.end());
  return HeightGrid(s.heights, delta, top + tail / p.pressure, extra_breakpoints);
}

std::span<const double> HeightGrid::nodes(std::size_t site) const {
  const std::size_t first = first_node_.at(site);
  return std::span<const double>(nodes_).subspan(first);
}

HeightGrid HeightGrid::refined() const { return HeightGrid(floors_, delta_, h_max_, extra_, refinement_ + 1); }

TransferOperators build_transfer_operators(const SubstrateSample& s, const ModelParams& p, const HeightGrid& grid,
                                           bool periodic) {
  p.validate();
  const std::size_t n = grid.sites();
  if (n != s.size()) throw Error(ErrorKind::LengthMismatch, "grid and substrate sizes differ");
  TransferOperators ops{grid, p, periodic, {}};
  const std::size_t bonds = periodic ? n : n - 1;
  ops.log_kernels.reserve(bonds);
  for (std::size_t i = 0; i < bonds; ++i) {
    const std::size_t next = (i + 1) % n;
    const auto x = grid.nodes(i);
    const auto y = grid.nodes(next);
    const auto w = grid.weights(next);
    if (x.size() < 2 || y.size() < 2) throw Error(ErrorKind::EmptyNodeSet, "site without quadrature nodes");
    Eigen::MatrixXd lk(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
    for (std::size_t c = 0; c < y.size(); ++c) {
      const double col = std::log(w[c]) - p.pressure * y[c];
      for (std::size_t r = 0; r < x.size(); ++r) {
        lk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col - p.coupling * std::abs(x[r] - y[c]);
      }
    }
    ops.log_kernels.push_back(std::move(lk));
  }
  return ops;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& log_kernel, double* log_scale) {
  const double shift = log_kernel.maxCoeff();
  if (log_scale) *log_scale = shift;
  return (log_kernel.array() - shift).exp().matrix();
}

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

PeriodicMoments exact_moments_periodic(const TransferOperators& ops, int max_lag) {
  if (!ops.periodic) throw Error(ErrorKind::InvalidParams, "periodic moments need ring operators");
  const std::size_t n = ops.sites();
  if (max_lag < 0) throw Error(ErrorKind::InvalidParams, "max_lag must be non-negative");

  std::vector<Eigen::MatrixXd> kernel(n);
  std::vector<double> shift(n);
  for (std::size_t i = 0; i < n; ++i) kernel[i] = kernel_matrix(ops.log_kernels[i], &shift[i]);

  // path[i][k]: product of k consecutive bond operators starting at site i,
  // rescaled to unit maximum; log_scale tracks what was divided out.
  std::vector<std::vector<Eigen::MatrixXd>> path(n, std::vector<Eigen::MatrixXd>(n));
  std::vector<std::vector<double>> log_scale(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    path[i][1] = kernel[i];
    log_scale[i][1] = shift[i];
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const std::size_t bond = (i + k) % n;
      Eigen::MatrixXd next = path[i][k] * kernel[bond];
      const double m = next.maxCoeff();
      path[i][k + 1] = next / m;
      log_scale[i][k + 1] = log_scale[i][k] + shift[bond] + std::log(m);
    }
  }

  PeriodicMoments out;
  out.mean_heights.assign(n, 0.0);
  out.second_moments = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = as_vector(ops.grid.nodes(i));
    for (std::size_t j = 1; j < n; ++j) {
      const std::size_t k = (i + j) % n;
      const auto hk = as_vector(ops.grid.nodes(k));
      // Tr(D_i A D_k B) / Tr(A B) with A: i -> k and B: k -> i around the ring.
      const Eigen::MatrixXd joint = path[i][j].cwiseProduct(path[k][n - j].transpose());
      const double z = joint.sum();
      const double hh = hi.dot(joint * hk) / z;
      out.second_moments(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = hh;
      if (j == 1) {
        const Eigen::VectorXd row_mass = joint.rowwise().sum();
        out.mean_heights[i] = hi.dot(row_mass) / z;
        out.second_moments(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
            hi.cwiseProduct(hi).dot(row_mass) / z;
        if (i == 0) out.log_partition = std::log(z) + log_scale[i][j] + log_scale[k][n - j];
      }
    }
  }

  const int lags = std::min<int>(max_lag, static_cast<int>(n) - 1);
  out.f.assign(static_cast<std::size_t>(lags) + 1, 0.0);
  out.f_spatial.assign(static_cast<std::size_t>(lags) + 1, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double mean_square = out.second_moments.sum() * inv_n * inv_n;
  for (int j = 0; j <= lags; ++j) {
    double cov = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = (i + static_cast<std::size_t>(j)) % n;
      const double hh = out.second_moments(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      raw += hh;
      cov += hh - out.mean_heights[i] * out.mean_heights[k];
    }
    out.f[static_cast<std::size_t>(j)] = cov * inv_n;
    out.f_spatial[static_cast<std::size_t>(j)] = raw * inv_n - mean_square;
  }
  return out;
}

double DiscreteMarginal::total_mass() const {
  double m = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) m += weights[k] * density[k];
  return m;
}

double DiscreteMarginal::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) m += weights[k] * density[k] * nodes[k];
  return m / total_mass();
}

double DiscreteMarginal::cdf(double h) const {
  if (nodes.empty() || h <= nodes.front()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double x0 = nodes[k], x1 = nodes[k + 1];
    if (h >= x1) {
      acc += 0.5 * (x1 - x0) * (density[k] + density[k + 1]);
      continue;
    }
    const double t = h - x0;
    const double slope = (density[k + 1] - density[k]) / (x1 - x0);
    acc += t * density[k] + 0.5 * slope * t * t;
    return acc;
  }
  return acc;
}

DiscreteMarginal exact_site_marginal_periodic(const TransferOperators& ops, std::size_t site) {
  if (!ops.periodic) throw Error(ErrorKind::InvalidParams, "periodic marginal needs ring operators");
  const std::size_t n = ops.sites();
  if (site >= n) throw Error(ErrorKind::InvalidParams, "site out of range");
  // Cycle product starting and ending at `site`; its diagonal is the unnormalised marginal mass.
  Eigen::MatrixXd cycle = kernel_matrix(ops.log_kernels[site]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    cycle = cycle * kernel_matrix(ops.log_kernels[(site + k) % n]);
    cycle /= cycle.maxCoeff();
  }
  const Eigen::MatrixXd closing = kernel_matrix(ops.log_kernels[(site + n - 1) % n]);
  const Eigen::VectorXd mass = cycle.cwiseProduct(closing.transpose()).rowwise().sum();

  DiscreteMarginal out;
  const auto x = ops.grid.nodes(site);
  const auto w = ops.grid.weights(site);
  out.nodes.assign(x.begin(), x.end());
  out.weights.assign(w.begin(), w.end());
  out.density.resize(x.size());
  const double total = mass.sum();
  for (std::size_t k = 0; k < x.size(); ++k) out.density[k] = mass[static_cast<Eigen::Index>(k)] / total / w[k];
  return out;
}

ChainMarginals exact_chain_marginals(const SubstrateSample& s, const ModelParams& p, const HeightGrid& grid,
                                     double h_start) {
  if (!(h_start >= s.heights.at(0))) throw Error(ErrorKind::InvalidParams, "h_start lies below the substrate");
  const auto ops = build_transfer_operators(s, p, grid, /*periodic=*/false);
  const std::size_t n = s.size();

  ChainMarginals out;
  out.h_start = h_start;
  out.sites.reserve(n - 1);

  // First transition from the fixed start value, then row-normalised kernels.
  Eigen::VectorXd mass;
  {
    const auto y = grid.nodes(1);
    const auto w = grid.weights(1);
    Eigen::VectorXd logp(static_cast<Eigen::Index>(y.size()));
    for (std::size_t c = 0; c < y.size(); ++c) {
      logp[static_cast<Eigen::Index>(c)] = std::log(w[c]) - p.coupling * std::abs(h_start - y[c]) - p.pressure * y[c];
    }
    mass = (logp.array() - logp.maxCoeff()).exp().matrix();
    mass /= mass.sum();
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (i > 1) {
      const auto& lk = ops.log_kernels[i - 1];
      const Eigen::VectorXd row_max = lk.rowwise().maxCoeff();
      Eigen::MatrixXd transition = (lk.colwise() - row_max).array().exp().matrix();
      const Eigen::VectorXd row_sum = transition.rowwise().sum();
      transition = row_sum.cwiseInverse().asDiagonal() * transition;
      mass = (mass.transpose() * transition).transpose();
    }
    DiscreteMarginal m;
    const auto x = grid.nodes(i);
    const auto w = grid.weights(i);
    m.nodes.assign(x.begin(), x.end());
    m.weights.assign(w.begin(), w.end());
    m.density.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) m.density[k] = mass[static_cast<Eigen::Index>(k)] / w[k];
    out.sites.push_back(std::move(m));
  }
  return out;
}

OracleReport evaluate_oracle(const SubstrateSample& s, const ModelParams& p, const OracleOptions& options) {
  const auto coarse_grid = HeightGrid::for_model(s, p, options.delta, options.tail);
  const auto fine_grid = coarse_grid.refined();
  const auto coarse = exact_moments_periodic(build_transfer_operators(s, p, coarse_grid), options.max_lag);
  const auto fine = exact_moments_periodic(build_transfer_operators(s, p, fine_grid), options.max_lag);

  OracleReport out;
  out.n = s.size();
  out.params = p;
  out.delta = options.delta;
  out.h_max = coarse_grid.h_max();
  out.substrate_seed = s.seed;
  out.log_partition = fine.log_partition;

  // Trapezoid error ~ delta^2: R = (4 fine - coarse) / 3, error of fine ~ |fine - coarse| / 3.
  double err = 0.0;
  auto extrapolate = [&err](const std::vector<double>& c, const std::vector<double>& f) {
    std::vector<double> r(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
      r[k] = (4.0 * f[k] - c[k]) / 3.0;
      err = std::max(err, std::abs(f[k] - c[k]) / 3.0);
    }
    return r;
  };
  out.mean_heights = extrapolate(coarse.mean_heights, fine.mean_heights);
  out.f = extrapolate(coarse.f, fine.f);
  out.f_spatial = extrapolate(coarse.f_spatial, fine.f_spatial);
  out.quadrature_error_estimate = err;
  return out;
}

}  // namespace wettingsim
