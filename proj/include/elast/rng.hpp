#pragma once

#include <cstdint>
#include <string_view>

#include "elast/common.hpp"

namespace elast {

namespace detail {
// SplitMix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

// Counter-based generator: draw i is a pure function of (key, i), so a Monte
// Carlo loop split across workers by index yields the same stream as a serial
// run. Child streams are derived by hashing a purpose tag into the key; a
// parent and its children never share counters.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x9e3779b97f4a7c15ull)) {}

  CounterRng child(std::string_view tag) const {
    CounterRng c(*this);
    c.key_ = detail::mix64(key_ ^ fnv1a64(tag));
    c.ctr_ = 0;
    return c;
  }
  CounterRng child(std::string_view tag, std::uint64_t index) const {
    CounterRng c = child(tag);
    c.key_ = detail::mix64(c.key_ + 0x9e3779b97f4a7c15ull * (index + 1));
    return c;
  }

  std::uint64_t u64_at(std::uint64_t i) const {
    return detail::mix64(key_ + 0x9e3779b97f4a7c15ull * (i + 1));
  }
  double uniform_at(std::uint64_t i) const {
    return static_cast<double>(u64_at(i) >> 11) * 0x1.0p-53;
  }
  // strictly inside (0,1) so the inverse CDF stays finite
  double normal_at(std::uint64_t i) const {
    const double u = (static_cast<double>(u64_at(i) >> 11) + 0.5) * 0x1.0p-53;
    return normal_icdf(u);
  }

  std::uint64_t next_u64() { return u64_at(ctr_++); }
  double uniform() { return uniform_at(ctr_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_at(ctr_++); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace elast
