#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "wettingsim/model.hpp"
#include "wettingsim/substrate.hpp"

namespace wettingsim {

/// Trapezoid quadrature nodes for every site of a small system.
///
/// All sites share one node set: breakpoints at every substrate height (and
/// any extra points), uniform cells of width <= delta between breakpoints, up
/// to h_max. Site i uses the shared nodes at or above its own floor. Because
/// every height that can appear as a neighbour is itself a node, the kinks of
/// exp(-J|x - y|) always fall on nodes and the trapezoid error expands in even
/// powers of delta. refined() halves every cell.
class HeightGrid {
 public:
  HeightGrid(std::span<const double> floors, double delta, double h_max,
             std::span<const double> extra_breakpoints = {}, int refinement = 0);

  /// h_max = max floor + tail / K.
  static HeightGrid for_model(const SubstrateSample& s, const ModelParams& p, double delta, double tail = 12.0,
                              std::span<const double> extra_breakpoints = {});

  [[nodiscard]] std::size_t sites() const noexcept { return first_node_.size(); }
  [[nodiscard]] std::span<const double> nodes(std::size_t site) const;
  [[nodiscard]] std::span<const double> weights(std::size_t site) const { return weights_.at(site); }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double h_max() const noexcept { return h_max_; }
  [[nodiscard]] int refinement() const noexcept { return refinement_; }
  [[nodiscard]] std::size_t total_nodes() const noexcept { return nodes_.size(); }
  [[nodiscard]] HeightGrid refined() const;

 private:
  std::vector<double> floors_;
  std::vector<double> extra_;
  double delta_;
  double h_max_;
  int refinement_;
  std::vector<double> nodes_;
  std::vector<std::size_t> first_node_;
  std::vector<std::vector<double>> weights_;
};

/// log T_i[x, y] = log w_y - J|x - y| - K y, x on site i, y on site i+1.
/// Entries are kept as logarithms so that every one of them is finite even
/// when exp would underflow.
struct TransferOperators {
  HeightGrid grid;
  ModelParams params;
  bool periodic = true;
  std::vector<Eigen::MatrixXd> log_kernels;

  [[nodiscard]] std::size_t sites() const noexcept { return grid.sites(); }
};

/// Periodic ring (N bonds, the last closing the ring) or open chain (N-1 bonds).
TransferOperators build_transfer_operators(const SubstrateSample& s, const ModelParams& p, const HeightGrid& grid,
                                           bool periodic = true);

/// exp(log_kernel - max); the subtracted maximum is returned through log_scale.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& log_kernel, double* log_scale = nullptr);

/// Exact-to-quadrature moments of the periodic Gibbs measure.
struct PeriodicMoments {
  std::vector<double> mean_heights;    // <h_i>
  Eigen::MatrixXd second_moments;      // <h_i h_k>
  std::vector<double> f;               // (1/N) sum_i <h_i; h_{i+j}>
  std::vector<double> f_spatial;       // expectation of the spatial estimator at this N
  double log_partition = 0.0;
};

PeriodicMoments exact_moments_periodic(const TransferOperators& ops, int max_lag);

/// Density on a site's nodes, normalised so that its trapezoid integral is 1.
struct DiscreteMarginal {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> density;

  [[nodiscard]] double total_mass() const;
  [[nodiscard]] double mean() const;
  /// Integral of the piecewise-linear density from the first node to h.
  [[nodiscard]] double cdf(double h) const;
};

DiscreteMarginal exact_site_marginal_periodic(const TransferOperators& ops, std::size_t site);

/// Marginals of the open chain started at h_start on site 0.
struct ChainMarginals {
  double h_start = 0.0;
  std::vector<DiscreteMarginal> sites;  // sites[k] is site k+1

  [[nodiscard]] const DiscreteMarginal& site(std::size_t i) const { return sites.at(i - 1); }
};

ChainMarginals exact_chain_marginals(const SubstrateSample& s, const ModelParams& p, const HeightGrid& grid,
                                     double h_start);

struct OracleOptions {
  double delta = 0.1;
  double tail = 12.0;  // h_max = max floor + tail / K
  int max_lag = 100;
};

/// Moments at delta and delta/2 combined by Richardson extrapolation.
struct OracleReport {
  std::size_t n = 0;
  ModelParams params;
  double delta = 0.0;
  double h_max = 0.0;
  std::uint64_t substrate_seed = 0;
  std::vector<double> mean_heights;
  std::vector<double> f;
  std::vector<double> f_spatial;
  double quadrature_error_estimate = 0.0;
  double log_partition = 0.0;
};

OracleReport evaluate_oracle(const SubstrateSample& s, const ModelParams& p, const OracleOptions& options = {});

}  // namespace wettingsim
