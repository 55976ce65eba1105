#pragma once

#include <array>
#include <cstdint>

namespace wettingsim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Stateless: every output block is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// Independent stream families sharing one 64-bit seed.
enum class StreamDomain : std::uint32_t {
  Substrate = 1,
  Dynamics = 2,
  Chain = 3,
};

inline constexpr const char* kGeneratorId = "philox4x32-10";

struct StreamBlock {
  std::uint64_t first;
  std::uint64_t second;
};

/// One 128-bit Philox block for element `index` of step `step` in the given
/// domain. Distinct (domain, index, step) triples map to distinct counters as
/// long as step < 2^56.
StreamBlock stream_block(std::uint64_t seed, StreamDomain domain, std::uint64_t index, std::uint64_t step) noexcept;

/// Writes uniform_open() of both halves of blocks first_index .. first_index+count-1
/// to out[0 .. 2*count-1], in order (first, second) per block.
void fill_stream_uniforms(std::uint64_t seed, StreamDomain domain, std::uint64_t first_index, std::uint64_t count,
                          std::uint64_t step, double* out) noexcept;

/// First 64 bits of stream_block().
inline std::uint64_t stream_bits(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
                                 std::uint64_t step) noexcept {
  return stream_block(seed, domain, index, step).first;
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Uniform on (0, 1]; never zero, so -log(u) is finite.
inline double uniform_open_closed(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace wettingsim
