#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "reference.hpp"
#include "wettingsim/error.hpp"
#include "wettingsim/oracle.hpp"

namespace wettingsim {
namespace {

SubstrateSample custom_substrate(std::vector<double> h) {
  SubstrateSample s;
  s.heights = std::move(h);
  s.generator_id = "test";
  return s;
}

PeriodicMoments moments(const SubstrateSample& s, const ModelParams& p, double delta, double tail = 12.0,
                        int max_lag = 100) {
  const auto grid = HeightGrid::for_model(s, p, delta, tail);
  return exact_moments_periodic(build_transfer_operators(s, p, grid), max_lag);
}

TEST(Oracle, ZeroCouplingFlatMean) {
  const auto s = generate_substrate(5, 0, SubstrateDistribution::FlatZero);
  const ModelParams p{0.0, 1.0};
  const auto m = moments(s, p, 0.01);
  for (double h : m.mean_heights) EXPECT_NEAR(h, 1.0, 1e-4);
  EXPECT_NEAR(m.f[1], 0.0, 1e-10);
  EXPECT_NEAR(m.f[2], 0.0, 1e-10);

  // With the cutoff at 12/K the law is Exp(1) truncated at 12.
  const double tail = std::exp(-12.0);
  const double mean = 1.0 - 12.0 * tail / (1.0 - tail);
  const double second = (2.0 - (144.0 + 24.0 + 2.0) * tail) / (1.0 - tail);
  EXPECT_NEAR(m.f[0], second - mean * mean, 1e-4);
}

TEST(Oracle, ZeroCouplingFlatVarianceWithWideCutoff) {
  const auto s = generate_substrate(4, 0, SubstrateDistribution::FlatZero);
  const auto m = moments(s, {0.0, 1.0}, 0.01, 24.0);
  EXPECT_NEAR(m.f[0], 1.0, 1e-4);
  for (double h : m.mean_heights) EXPECT_NEAR(h, 1.0, 1e-4);
  EXPECT_NEAR(m.log_partition, 0.0, 1e-4 * 4);
}

TEST(Oracle, ZeroCouplingShiftedExponential) {
  const auto s = generate_substrate(6, 3, SubstrateDistribution::ExpMeanOne);
  const double K = 0.5;
  const auto rep = evaluate_oracle(s, {0.0, K}, {0.1, 20.0, 5});
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(rep.mean_heights[i], s.heights[i] + 1.0 / K, 1e-4);
  EXPECT_NEAR(rep.f[0], 1.0 / (K * K), 1e-3);
  for (std::size_t j = 1; j < rep.f.size(); ++j) EXPECT_NEAR(rep.f[j], 0.0, 1e-8);
}

TEST(Oracle, RichardsonLimitStable) {
  const auto s = generate_substrate(6, 11, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{1.0, 0.5};
  const auto coarse = evaluate_oracle(s, p, {0.2, 12.0, 3});
  const auto fine = evaluate_oracle(s, p, {0.1, 12.0, 3});
  EXPECT_NEAR(coarse.f[1], fine.f[1], 1e-4);
  EXPECT_LT(fine.quadrature_error_estimate, 1e-3);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(coarse.mean_heights[i], fine.mean_heights[i], 1e-4);
}

TEST(Oracle, HalvingGridMovesMomentsBelowTolerance) {
  const auto s = generate_substrate(5, 2, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{2.0, 0.3};
  const auto a = moments(s, p, 0.05);
  const auto b = moments(s, p, 0.025);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LT(std::abs(a.mean_heights[i] - b.mean_heights[i]), 1e-3);
  for (std::size_t j = 0; j < a.f.size(); ++j) EXPECT_LT(std::abs(a.f[j] - b.f[j]), 1e-3);
}

// Two-site ring: H = 2J|h0 - h1| + K(h0 + h1). Nested Simpson integrals split at every kink.
TEST(Oracle, TwoSiteRingMatchesNestedQuadrature) {
  const auto s = custom_substrate({0.3, 1.1});
  const double J = 0.7, K = 0.6;
  const double top = 1.1 + 30.0 / K;
  auto inner = [&](double h0, int power) {
    auto g = [&](double h1) { return std::pow(h1, power) * std::exp(-2 * J * std::abs(h0 - h1) - K * h1); };
    if (h0 <= s.heights[1]) return testing::simpson(g, s.heights[1], top, 20000);
    return testing::simpson(g, s.heights[1], h0, 4000) + testing::simpson(g, h0, top, 20000);
  };
  auto outer = [&](int p0, int p1) {
    auto g = [&](double h0) { return std::pow(h0, p0) * std::exp(-K * h0) * inner(h0, p1); };
    return testing::simpson(g, s.heights[0], s.heights[1], 400) + testing::simpson(g, s.heights[1], top, 4000);
  };
  const double z = outer(0, 0);
  const double m0 = outer(1, 0) / z, m1 = outer(0, 1) / z;
  const double s00 = outer(2, 0) / z, s11 = outer(0, 2) / z, s01 = outer(1, 1) / z;

  const auto rep = evaluate_oracle(s, {J, K}, {0.02, 30.0, 1});
  EXPECT_NEAR(rep.mean_heights[0], m0, 1e-5);
  EXPECT_NEAR(rep.mean_heights[1], m1, 1e-5);
  EXPECT_NEAR(rep.f[0], 0.5 * (s00 - m0 * m0 + s11 - m1 * m1), 1e-5);
  EXPECT_NEAR(rep.f[1], s01 - m0 * m1, 1e-5);
}

TEST(Oracle, SiteMarginalConsistentWithMoments) {
  const auto s = generate_substrate(5, 8, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{1.0, 0.5};
  const auto grid = HeightGrid::for_model(s, p, 0.1);
  const auto ops = build_transfer_operators(s, p, grid);
  const auto m = exact_moments_periodic(ops, 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto marg = exact_site_marginal_periodic(ops, i);
    EXPECT_NEAR(marg.total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(marg.mean(), m.mean_heights[i], 1e-9);
    EXPECT_GE(marg.nodes.front(), s.heights[i]);
    EXPECT_NEAR(marg.cdf(marg.nodes.back()), 1.0, 1e-12);
  }
}

TEST(Oracle, FkgNonNegativeCorrelation) {
  const auto s = generate_substrate(6, 4, SubstrateDistribution::ExpMeanOne);
  for (double J : {0.5, 1.0, 2.0}) {
    for (double K : {0.3, 0.5}) {
      const auto m = moments(s, {J, K}, 0.1);
      for (std::size_t j = 0; j < m.f.size(); ++j) EXPECT_GE(m.f[j], 0.0) << J << " " << K << " j=" << j;
    }
  }
}

TEST(Operators, ZeroCouplingKernelHasRankOne) {
  const auto s = generate_substrate(4, 1, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{0.0, 0.5};
  const auto ops = build_transfer_operators(s, p, HeightGrid::for_model(s, p, 0.2));
  for (const auto& lk : ops.log_kernels) {
    const Eigen::MatrixXd k = kernel_matrix(lk);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    const auto sv = svd.singularValues();
    EXPECT_LT(sv[1] / sv[0], 1e-12);
  }
}

TEST(Operators, StrongCouplingEntriesFinite) {
  const auto s = generate_substrate(4, 1, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{10.0, 0.1};
  const auto ops = build_transfer_operators(s, p, HeightGrid::for_model(s, p, 0.2));
  ASSERT_EQ(ops.log_kernels.size(), 4u);
  for (const auto& lk : ops.log_kernels) {
    EXPECT_TRUE(lk.allFinite());
    const Eigen::MatrixXd k = kernel_matrix(lk);
    EXPECT_TRUE(k.allFinite());
    EXPECT_GE(k.minCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(k.maxCoeff(), 1.0);
  }
  const auto open = build_transfer_operators(s, p, HeightGrid::for_model(s, p, 0.2), false);
  EXPECT_EQ(open.log_kernels.size(), 3u);
}

std::vector<double> cycle_spectrum(const SubstrateSample& s, const ModelParams& p, const HeightGrid& grid) {
  const auto ops = build_transfer_operators(s, p, grid);
  Eigen::MatrixXd prod = kernel_matrix(ops.log_kernels[0]);
  for (std::size_t i = 1; i < ops.sites(); ++i) {
    prod = prod * kernel_matrix(ops.log_kernels[i]);
    prod /= prod.maxCoeff();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(prod, false);
  std::vector<double> mags;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) mags.push_back(std::abs(es.eigenvalues()[k]));
  std::sort(mags.rbegin(), mags.rend());
  mags.resize(5);
  return mags;
}

void expect_reflection_invariant(const std::vector<double>& h) {
  const std::size_t n = h.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = h[(n - i) % n];
  const auto s = custom_substrate(h), sr = custom_substrate(r);
  const ModelParams p{0.8, 0.5};
  const auto grid = HeightGrid::for_model(s, p, 0.15);
  const auto a = cycle_spectrum(s, p, grid);
  const auto b = cycle_spectrum(sr, p, grid);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k] / a[0], b[k] / b[0], 1e-9) << k;
}

TEST(Operators, ReflectionSpectrumSymmetricSubstrate) { expect_reflection_invariant({0.2, 1.4, 0.7, 0.7, 1.4}); }

TEST(Operators, ReflectionSpectrumGeneralSubstrate) { expect_reflection_invariant({0.2, 1.4, 0.1, 2.0, 0.9}); }

TEST(Grid, Validation) {
  const std::vector<double> floors = {0.0, 3.0};
  try {
    HeightGrid g(floors, 0.1, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyNodeSet);
  }
  EXPECT_THROW(HeightGrid(floors, 0.0, 20.0), Error);
  EXPECT_THROW(HeightGrid(std::vector<double>{0.0}, 0.1, 20.0), Error);
  const auto s = generate_substrate(3, 1, SubstrateDistribution::ExpMeanOne);
  EXPECT_THROW((void)HeightGrid::for_model(s, {1.0, 0.5}, 0.1, 5.0), Error);
}

TEST(Grid, NodesCoverFloorsAndBreakpoints) {
  const std::vector<double> floors = {0.0, 0.37, 1.5};
  const HeightGrid g(floors, 0.1, 5.0);
  for (std::size_t i = 0; i < floors.size(); ++i) {
    const auto nodes = g.nodes(i);
    EXPECT_EQ(nodes.front(), floors[i]);
    EXPECT_EQ(nodes.back(), 5.0);
    for (double f : floors) {
      if (f >= floors[i]) EXPECT_TRUE(std::binary_search(nodes.begin(), nodes.end(), f));
    }
    for (std::size_t k = 1; k < nodes.size(); ++k) EXPECT_LE(nodes[k] - nodes[k - 1], 0.1 + 1e-12);
    double w = 0;
    for (double x : g.weights(i)) w += x;
    EXPECT_NEAR(w, 5.0 - floors[i], 1e-12);
  }
  const auto r = g.refined();
  EXPECT_EQ(r.refinement(), 1);
  EXPECT_EQ(r.total_nodes(), 2 * g.total_nodes() - 1);
}

TEST(Chain, MarginalsAreNormalised) {
  const auto s = generate_substrate(6, 9, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{1.0, 0.5};
  const auto grid = HeightGrid::for_model(s, p, 0.1);
  const auto chain = exact_chain_marginals(s, p, grid, s.heights[0] + 1.0);
  ASSERT_EQ(chain.sites.size(), 5u);
  for (const auto& m : chain.sites) EXPECT_NEAR(m.total_mass(), 1.0, 1e-6);
}

TEST(Chain, ZeroCouplingForgetsStart) {
  const auto s = generate_substrate(5, 9, SubstrateDistribution::ExpMeanOne);
  const ModelParams p{0.0, 0.5};
  const auto grid = HeightGrid::for_model(s, p, 0.02, 20.0);
  const auto a = exact_chain_marginals(s, p, grid, s.heights[0]);
  const auto b = exact_chain_marginals(s, p, grid, s.heights[0] + 7.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_NEAR(a.site(i).mean(), s.heights[i] + 2.0, 1e-3);
    for (std::size_t k = 0; k < a.site(i).density.size(); ++k) {
      EXPECT_NEAR(a.site(i).density[k], b.site(i).density[k], 1e-12);
    }
    const double x = s.heights[i] + 1.3;
    EXPECT_NEAR(a.site(i).cdf(x), 1.0 - std::exp(-0.5 * 1.3), 1e-3);
  }
}

TEST(Chain, StartBelowFloorRejected) {
  const auto s = custom_substrate({1.0, 0.5, 0.2});
  const ModelParams p{1.0, 0.5};
  EXPECT_THROW((void)exact_chain_marginals(s, p, HeightGrid::for_model(s, p, 0.1), 0.5), Error);
}

TEST(Oracle, ReportFields) {
  const auto s = generate_substrate(4, 77, SubstrateDistribution::ExpMeanOne);
  const auto rep = evaluate_oracle(s, {1.0, 0.5}, {0.1, 12.0, 10});
  EXPECT_EQ(rep.n, 4u);
  EXPECT_EQ(rep.substrate_seed, 77u);
  EXPECT_EQ(rep.delta, 0.1);
  EXPECT_EQ(rep.f.size(), 4u);
  EXPECT_EQ(rep.mean_heights.size(), 4u);
  EXPECT_NEAR(rep.h_max, *std::max_element(s.heights.begin(), s.heights.end()) + 24.0, 1e-12);
  EXPECT_GE(rep.quadrature_error_estimate, 0.0);
  EXPECT_TRUE(std::isfinite(rep.log_partition));
}

}  // namespace
}  // namespace wettingsim
