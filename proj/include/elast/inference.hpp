#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "elast/baseline.hpp"
#include "elast/common.hpp"
#include "elast/jsonio.hpp"
#include "elast/report.hpp"

// Cross-estimator hypothesis tests. Both estimators in a comparison are fit
// on the same sample, so their sampling errors are dependent; each is
// asymptotically linear, so the variance of the difference is the empirical
// variance of the stacked per-observation influence difference.
namespace elast::inference {

enum class Convention { continuous, discrete };

inline std::string to_string(Convention c) {
  return c == Convention::continuous ? "continuous" : "discrete";
}

struct ComparisonResult {
  double estimate_a = 0.0;  // reference fit (log-linear or count-model side)
  double estimate_b = 0.0;  // arithmetic-mean estimate under test
  double difference = 0.0;  // estimate_a - estimate_b
  double se_difference = 0.0;
  double z_stat = 0.0;
  double p_value = 1.0;
  Convention convention = Convention::continuous;
  bool sign_flip = false;
  double level = 0.95;  // two-sided significance convention used

  bool significant() const { return p_value < 1.0 - level; }
};

namespace detail {

// Differences smaller than this relative to the estimates' scale are
// indistinguishable from floating-point noise; such pairs are reported as
// identical (z = 0, p = 1) rather than letting a 0/0 ratio pick a verdict.
constexpr double kIdenticalTol = 1e-10;

inline ComparisonResult compare_influences(double est_a, const Eigen::VectorXd& inf_a,
                                           double est_b, const Eigen::VectorXd& inf_b,
                                           double level, Convention conv) {
  if (inf_a.size() != inf_b.size())
    throw ParameterError("compare: per-observation influence lengths differ (" +
                         std::to_string(inf_a.size()) + " vs " + std::to_string(inf_b.size()) +
                         "); both estimators must be fit on the same sample");
  const Eigen::Index n = inf_a.size();
  if (n < 2) throw ParameterError("compare: need at least 2 observations");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("compare: level must lie in (0,1)");

  ComparisonResult r;
  r.convention = conv;
  r.level = level;
  r.estimate_a = est_a;
  r.estimate_b = est_b;
  r.difference = est_a - est_b;

  const Eigen::VectorXd d = inf_a - inf_b;
  const Eigen::ArrayXd centered = d.array() - d.mean();
  r.se_difference =
      std::sqrt(centered.square().sum() / static_cast<double>(n) / static_cast<double>(n));

  const double scale = std::fabs(est_a) + std::fabs(est_b) + 1.0;
  if (std::fabs(r.difference) <= kIdenticalTol * scale &&
      r.se_difference <= kIdenticalTol * scale) {
    r.z_stat = 0.0;
    r.p_value = 1.0;
  } else if (r.se_difference == 0.0) {
    r.z_stat = r.difference > 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.z_stat = r.difference / r.se_difference;
    r.p_value = std::erfc(std::fabs(r.z_stat) / std::sqrt(2.0));
  }
  r.sign_flip = r.significant() && est_a * est_b < 0.0;
  return r;
}

}  // namespace detail

// H0: the log-model slope equals the arithmetic-mean (semi-)elasticity.
inline ComparisonResult compare_continuous(const baseline::FitResult& fit,
                                           const EstimateReport& report, double level = 0.95) {
  const int ix = fit.index_of("x");
  return detail::compare_influences(fit.coefficients[ix], fit.influence.col(ix),
                                    report.theta_hat, report.scores, level,
                                    Convention::continuous);
}

// H0: exp(slope) - 1 equals the arithmetic percentage change. For a binary
// treatment the exponentiated log-model (or count-model) coefficient is the
// comparable percentage effect; the influence is rescaled by the delta
// method.
inline ComparisonResult compare_discrete(const baseline::FitResult& fit,
                                         const EstimateReport& report, double level = 0.95) {
  const int ix = fit.index_of("x");
  const double grad = std::exp(fit.coefficients[ix]);
  return detail::compare_influences(grad - 1.0, grad * fit.influence.col(ix), report.theta_hat,
                                    report.scores, level, Convention::discrete);
}

// One row of the comparison summary: every result lands in "No Change" or
// "Sig. Different"; the significant ones are further split into exactly one
// of increase / decrease (by absolute value) / sign change.
struct BatchTable {
  Eigen::Index no_change = 0;
  Eigen::Index sig_different = 0;
  Eigen::Index effect_increase = 0;
  Eigen::Index effect_decrease = 0;
  Eigen::Index sign_change = 0;

  Eigen::Index total() const { return no_change + sig_different; }
};

inline BatchTable summarize_batch(const std::vector<ComparisonResult>& results) {
  if (results.empty()) throw ParameterError("summarize_batch: no comparison results given");
  BatchTable t;
  for (const ComparisonResult& r : results) {
    if (!r.significant()) {
      ++t.no_change;
      continue;
    }
    ++t.sig_different;
    if (r.sign_flip)
      ++t.sign_change;
    else if (std::fabs(r.estimate_b) > std::fabs(r.estimate_a))
      ++t.effect_increase;
    else
      ++t.effect_decrease;
  }
  return t;
}

inline Json to_json(const ComparisonResult& r) {
  return Json{{"estimate_a", r.estimate_a},
              {"estimate_b", r.estimate_b},
              {"difference", r.difference},
              {"se_difference", r.se_difference},
              {"z_stat", r.z_stat},
              {"p_value", r.p_value},
              {"convention", to_string(r.convention)},
              {"sign_flip", r.sign_flip},
              {"level", r.level}};
}

inline Json to_json(const BatchTable& t) {
  return Json{{"no_change", t.no_change},
              {"sig_different", t.sig_different},
              {"effect_increase", t.effect_increase},
              {"effect_decrease", t.effect_decrease},
              {"sign_change", t.sign_change}};
}

// CSV rows in the published table's column order, one line per labeled batch
inline std::string to_csv(const std::vector<std::pair<std::string, BatchTable>>& rows) {
  std::string out = ",No Change,Sig. Different,Effect Increase,Effect Decrease,Sign Change\n";
  for (const auto& [label, t] : rows) {
    out += label;
    for (const Eigen::Index c :
         {t.no_change, t.sig_different, t.effect_increase, t.effect_decrease, t.sign_change})
      out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

}  // namespace elast::inference
