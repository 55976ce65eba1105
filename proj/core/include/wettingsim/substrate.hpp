#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wettingsim/correlation.hpp"

namespace wettingsim {

enum class SubstrateDistribution { ExpMeanOne, FlatZero };

std::string_view to_string(SubstrateDistribution d) noexcept;
SubstrateDistribution parse_distribution(std::string_view id);

/// Quenched substrate heights h^1_i >= 0 together with everything needed to
/// regenerate them bit-exactly.
struct SubstrateSample {
  std::vector<double> heights;
  std::uint64_t seed = 0;
  std::string generator_id;
  SubstrateDistribution distribution = SubstrateDistribution::ExpMeanOne;

  [[nodiscard]] std::size_t size() const noexcept { return heights.size(); }
  friend bool operator==(const SubstrateSample&, const SubstrateSample&) = default;
};

/// i.i.d. Exp(1) heights via -log(U), U in (0,1], or all zeros for a flat floor.
SubstrateSample generate_substrate(std::size_t n, std::uint64_t seed, SubstrateDistribution distribution);

CorrelationEstimate substrate_autocovariance(const SubstrateSample& s, int max_lag = 100);

void save_substrate(const SubstrateSample& s, const std::filesystem::path& path);
SubstrateSample load_substrate(const std::filesystem::path& path);

/// Text form used by save_substrate; exposed for embedding in other files.
std::string serialize_substrate(const SubstrateSample& s);
SubstrateSample parse_substrate(std::string_view text);

}  // namespace wettingsim
