#include "wettingsim/rng.hpp"

#include <cstddef>

namespace wettingsim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter counter, Key key) noexcept {
  std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c0, hi0, lo0);
    mulhilo(kMul1, c2, hi1, lo1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

StreamBlock stream_block(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
                         std::uint64_t step) noexcept {
  const Philox4x32::Counter counter{
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(step),
      (static_cast<std::uint32_t>(domain) << 24) ^ (static_cast<std::uint32_t>(step >> 32) & 0x00FFFFFFu)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::generate(counter, key);
  return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1], (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
}

namespace {

constexpr std::size_t kChunk = 256;

// Philox rounds over a chunk of independent counters held as four lane arrays.
// Separate lane arrays and a fixed trip count let the loop vectorise.
__attribute__((target_clones("avx512f", "avx2", "default"))) void philox_lanes(
    std::uint32_t* __restrict c0, std::uint32_t* __restrict c1, std::uint32_t* __restrict c2,
    std::uint32_t* __restrict c3, std::uint32_t key0, std::uint32_t key1) noexcept {
  for (std::size_t l = 0; l < kChunk; ++l) {
    std::uint32_t x0 = c0[l], x1 = c1[l], x2 = c2[l], x3 = c3[l];
    std::uint32_t k0 = key0, k1 = key1;
#pragma GCC unroll 10
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x2;
      x0 = static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
      x1 = static_cast<std::uint32_t>(p1);
      x2 = static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
      x3 = static_cast<std::uint32_t>(p0);
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    c0[l] = x0;
    c1[l] = x1;
    c2[l] = x2;
    c3[l] = x3;
  }
}

}  // namespace

void fill_stream_uniforms(std::uint64_t seed, StreamDomain domain, std::uint64_t first_index, std::uint64_t count,
                          std::uint64_t step, double* out) noexcept {
  const auto step_lo = static_cast<std::uint32_t>(step);
  const auto tag = (static_cast<std::uint32_t>(domain) << 24) ^ (static_cast<std::uint32_t>(step >> 32) & 0x00FFFFFFu);
  const auto key0 = static_cast<std::uint32_t>(seed);
  const auto key1 = static_cast<std::uint32_t>(seed >> 32);
  alignas(64) std::uint32_t c0[kChunk], c1[kChunk], c2[kChunk], c3[kChunk];
  for (std::uint64_t base = 0; base < count; base += kChunk) {
    const std::size_t m = static_cast<std::size_t>(count - base < kChunk ? count - base : kChunk);
    for (std::size_t l = 0; l < kChunk; ++l) {
      const std::uint64_t index = first_index + base + l;
      c0[l] = static_cast<std::uint32_t>(index);
      c1[l] = static_cast<std::uint32_t>(index >> 32);
      c2[l] = step_lo;
      c3[l] = tag;
    }
    philox_lanes(c0, c1, c2, c3, key0, key1);
    double* dst = out + 2 * base;
    for (std::size_t l = 0; l < m; ++l) {
      dst[2 * l] = uniform_open((static_cast<std::uint64_t>(c0[l]) << 32) | c1[l]);
      dst[2 * l + 1] = uniform_open((static_cast<std::uint64_t>(c2[l]) << 32) | c3[l]);
    }
  }
}

}  // namespace wettingsim
