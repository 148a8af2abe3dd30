#include "palmrt/random.hpp"

#include "palmrt/special_functions.hpp"

#include <cmath>

namespace palmrt::rng {

namespace {

// Philox-4x32 round constants.
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& ctr,
                       const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

void PhiloxStream::refill() {
  std::array<std::uint32_t, 4> ctr = base_;
  std::array<std::uint32_t, 2> key = key_;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    round_once(ctr, key);
  }
  block_ = ctr;
  cursor_ = 0;
  // advance the 64-bit draw counter
  if (++base_[0] == 0) ++base_[1];
}

double draw_normal(PhiloxStream& s) {
  return special::normal_quantile(s.next_unit_open());
}

double draw_t3(PhiloxStream& s) {
  return special::student_t3_quantile(s.next_unit_open());
}

double draw_cauchy(PhiloxStream& s) {
  return std::tan(3.141592653589793238462643383279502884 *
                  (s.next_unit_open() - 0.5));
}

double draw_lognormal(PhiloxStream& s) { return std::exp(draw_normal(s)); }

Permutation random_permutation(PhiloxStream& s, Index n) {
  std::vector<Index> m(n);
  for (Index i = 0; i < n; ++i) m[i] = i;
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(
        s.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(m[i], m[j]);
  }
  return Permutation(std::move(m));
}

}  // namespace palmrt::rng
