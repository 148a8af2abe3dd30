#pragma once

#include "palmrt/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace palmrt::rng {

/// Counter-based stream built on Philox-4x32-10 (Salmon et al., SC 2011).
/// The 128-bit counter is split as [draw_lo, draw_hi, stream_lo, stream_hi]
/// and the 64-bit key is the user seed, so the k-th output of stream s under
/// seed q is a pure function of (q, s, k): streams can be consumed in any
/// order, on any thread, with identical results.
///
/// Stream ids used across the library: stream 0 generates data; streams
/// 1 + b generate permutation b of a test run.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        base_{0, 0, static_cast<std::uint32_t>(stream),
              static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint32_t next_u32() {
    if (cursor_ == 4) refill();
    return block_[cursor_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1); safe for inverse-CDF transforms.
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Truncation bias is O(bound * 2^-53).
  std::uint64_t next_below(std::uint64_t bound) {
    const auto v =
        static_cast<std::uint64_t>(next_unit() * static_cast<double>(bound));
    return v >= bound ? bound - 1 : v;
  }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;  // running counter
  std::array<std::uint32_t, 4> block_{};
  int cursor_ = 4;
};

/// Inverse-CDF draws on one stream.
double draw_normal(PhiloxStream& s);
double draw_t3(PhiloxStream& s);
double draw_cauchy(PhiloxStream& s);
double draw_lognormal(PhiloxStream& s);  // log e ~ N(0,1)

/// Uniform permutation of {0,...,n-1} by Fisher-Yates on the stream's draws.
Permutation random_permutation(PhiloxStream& s, Index n);

}  // namespace palmrt::rng
