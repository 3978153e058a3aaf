#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "elast/common.hpp"
#include "elast/rng.hpp"

namespace elast {

// A balanced random partition of observation indices into K folds. The
// assignment is a pure function of (n, K, seed), so any consumer can rebuild
// the same split, and fold sizes differ by at most one.
struct CrossFitPlan {
  Eigen::Index n = 0;
  int K = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // fold index per observation, values in [0, K)

  std::vector<Eigen::Index> fold(int k) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < n; ++i)
      if (assignment[static_cast<std::size_t>(i)] == k) out.push_back(i);
    return out;
  }
  std::vector<Eigen::Index> complement(int k) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < n; ++i)
      if (assignment[static_cast<std::size_t>(i)] != k) out.push_back(i);
    return out;
  }
  std::vector<Eigen::Index> fold_sizes() const {
    std::vector<Eigen::Index> s(static_cast<std::size_t>(K), 0);
    for (int a : assignment) ++s[static_cast<std::size_t>(a)];
    return s;
  }
};

inline CrossFitPlan make_plan(Eigen::Index n, int K, std::uint64_t seed) {
  if (K < 2) throw ParameterError("make_plan: need at least 2 folds, got " + std::to_string(K));
  if (n < 2 * static_cast<Eigen::Index>(K))
    throw ParameterError("make_plan: need n >= 2K (n = " + std::to_string(n) +
                         ", K = " + std::to_string(K) + ")");
  CrossFitPlan p;
  p.n = n;
  p.K = K;
  p.seed = seed;
  // shuffle the indices, then deal them round-robin: balanced by construction
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  CounterRng shuf = CounterRng(seed).child("crossfit");
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(shuf.uniform() * static_cast<double>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  p.assignment.assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index r = 0; r < n; ++r)
    p.assignment[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] =
        static_cast<int>(r % K);
  return p;
}

}  // namespace elast
