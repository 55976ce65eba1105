#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "wettingsim/rng.hpp"

namespace wettingsim {
namespace {

TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                        {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(StreamBlock, DistinctAcrossDomainsIndicesAndSteps) {
  std::set<std::uint64_t> seen;
  for (auto domain : {StreamDomain::Substrate, StreamDomain::Dynamics, StreamDomain::Chain}) {
    for (std::uint64_t i = 0; i < 16; ++i) {
      for (std::uint64_t s = 0; s < 16; ++s) seen.insert(stream_bits(99, domain, i, s));
    }
  }
  EXPECT_EQ(seen.size(), 3u * 16u * 16u);
}

TEST(StreamBlock, SeedChangesOutput) {
  EXPECT_NE(stream_bits(1, StreamDomain::Dynamics, 0, 0), stream_bits(2, StreamDomain::Dynamics, 0, 0));
  EXPECT_NE(stream_bits(1ULL << 40, StreamDomain::Dynamics, 0, 0), stream_bits(0, StreamDomain::Dynamics, 0, 0));
}

TEST(FillStreamUniforms, MatchesSingleBlocks) {
  for (std::uint64_t first : {0ULL, 5ULL, 0xffffff00ULL}) {
    const std::uint64_t count = 700;
    std::vector<double> out(2 * count);
    fill_stream_uniforms(1234, StreamDomain::Dynamics, first, count, 77, out.data());
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto block = stream_block(1234, StreamDomain::Dynamics, first + k, 77);
      ASSERT_EQ(out[2 * k], uniform_open(block.first)) << first + k;
      ASSERT_EQ(out[2 * k + 1], uniform_open(block.second)) << first + k;
    }
  }
}

TEST(FillStreamUniforms, LargeStep) {
  const std::uint64_t step = (1ULL << 40) + 3;
  std::vector<double> out(2);
  fill_stream_uniforms(5, StreamDomain::Chain, 9, 1, step, out.data());
  EXPECT_EQ(out[0], uniform_open(stream_block(5, StreamDomain::Chain, 9, step).first));
}

TEST(Uniform, Bounds) {
  EXPECT_GT(uniform_open(0), 0.0);
  EXPECT_LT(uniform_open(~0ULL), 1.0);
  EXPECT_GT(uniform_open_closed(0), 0.0);
  EXPECT_EQ(uniform_open_closed(~0ULL), 1.0);
}

}  // namespace
}  // namespace wettingsim
