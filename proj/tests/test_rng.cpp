#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "elast/common.hpp"
#include "elast/rng.hpp"

using namespace elast;

TEST_CASE("counter rng is deterministic and seed-sensitive") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    REQUIRE(va == b.next_u64());
  }
  bool any_diff = false;
  CounterRng a2(42);
  for (int i = 0; i < 100; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
  REQUIRE(any_diff);
}

TEST_CASE("sequential draws equal random access draws") {
  CounterRng seq(7);
  const CounterRng ra(7);
  for (std::uint64_t i = 0; i < 50; ++i) REQUIRE(seq.normal() == ra.normal_at(i));
}

TEST_CASE("child streams are distinct from parent and from each other") {
  const CounterRng root(99);
  const CounterRng c1 = root.child("x");
  const CounterRng c2 = root.child("noise");
  const CounterRng c1i = root.child("x", 5);
  REQUIRE(c1.key() != c2.key());
  REQUIRE(c1.key() != root.key());
  REQUIRE(c1i.key() != c1.key());
  REQUIRE(root.child("x").key() == c1.key());  // same tag, same stream
}

TEST_CASE("uniforms live in [0,1) and normals match moments") {
  const CounterRng r(2024);
  const CounterRng rn = r.child("n");
  const std::size_t n = 200000;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = r.uniform_at(i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rn.normal_at(i);
    s += z;
    s2 += z * z;
  }
  const double nd = static_cast<double>(n);
  REQUIRE(std::fabs(s / nd) < 4.0 / std::sqrt(nd));
  REQUIRE(std::fabs(s2 / nd - 1.0) < 6.0 / std::sqrt(nd));
}

TEST_CASE("inverse normal cdf hits reference quantiles") {
  REQUIRE_THAT(normal_icdf(0.5), Catch::Matchers::WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(normal_icdf(0.975), Catch::Matchers::WithinAbs(1.959963984540054, 1e-12));
  REQUIRE_THAT(normal_icdf(0.9), Catch::Matchers::WithinAbs(1.2815515655446004, 1e-12));
  REQUIRE_THAT(normal_icdf(0.025), Catch::Matchers::WithinAbs(-1.959963984540054, 1e-12));
  REQUIRE_THAT(normal_icdf(1e-10), Catch::Matchers::WithinAbs(-6.361340902404056, 1e-9));
  // round trip through the cdf
  for (double p : {0.001, 0.2, 0.5, 0.77, 0.999})
    REQUIRE_THAT(normal_cdf(normal_icdf(p)), Catch::Matchers::WithinAbs(p, 1e-12));
  REQUIRE_THROWS_AS(normal_icdf(0.0), ParameterError);
  REQUIRE_THROWS_AS(normal_icdf(1.0), ParameterError);
}

TEST_CASE("pairwise sum is invariant to aligned split points") {
  const CounterRng r(5);
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (r.uniform_at(i) - 0.5) * 1e6;
  const double whole = pairwise_sum(v);
  // a worker that sums the two canonical halves and combines must agree bitwise
  const std::size_t mid = v.size() / 2;
  const double split = pairwise_sum(v.data(), 0, mid) + pairwise_sum(v.data(), mid, v.size());
  REQUIRE(whole == split);
}
