#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "elast/common.hpp"
#include "elast/jsonio.hpp"

namespace elast {

// Common result shape for every estimator the tool exposes: a scalar target,
// its standard error, a normal CI, and per-observation scores whose mean is
// zero at the estimate (the influence function evaluated at the fit).
struct EstimateReport {
  std::string method;
  double theta_hat = 0.0;
  double se = 0.0;
  double level = 0.95;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  Eigen::Index n = 0;
  int folds = 0;           // 0 for non-cross-fitted estimators
  std::uint64_t seed = 0;  // 0 when no randomness was consumed
  Eigen::VectorXd scores;
  Json diagnostics = Json::object();
  std::string config_hash_hex;
  std::string dataset_hash_hex;

  void finalize_ci() {
    const double zq = normal_icdf(0.5 + level / 2.0);
    ci_lo = theta_hat - zq * se;
    ci_hi = theta_hat + zq * se;
  }
  bool covers(double value) const { return ci_lo <= value && value <= ci_hi; }
};

inline Json to_json(const EstimateReport& r, bool emit_scores = true) {
  Json j{{"schema_version", kSchemaVersion},
         {"method", r.method},
         {"theta_hat", r.theta_hat},
         {"se", r.se},
         {"level", r.level},
         {"ci", Json::array({r.ci_lo, r.ci_hi})},
         {"n", r.n},
         {"folds", r.folds},
         {"seed", r.seed},
         {"diagnostics", r.diagnostics},
         {"config_hash", r.config_hash_hex},
         {"dataset_hash", r.dataset_hash_hex}};
  if (emit_scores) {
    Json s = Json::array();
    for (Eigen::Index i = 0; i < r.scores.size(); ++i) s.push_back(r.scores[i]);
    j["scores"] = std::move(s);
  }
  return j;
}

inline EstimateReport report_from_json(const Json& j) {
  check_keys(j,
             {"schema_version", "method", "theta_hat", "se", "level", "ci", "n", "folds", "seed",
              "diagnostics", "config_hash", "dataset_hash", "scores"},
             "estimate report");
  const int ver = require_field(j, "schema_version", "estimate report").get<int>();
  if (ver != kSchemaVersion)
    throw ParameterError("estimate report: schema_version " + std::to_string(ver) +
                         " unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  EstimateReport r;
  r.method = require_field(j, "method", "estimate report").get<std::string>();
  r.theta_hat = require_field(j, "theta_hat", "estimate report").get<double>();
  r.se = require_field(j, "se", "estimate report").get<double>();
  r.level = require_field(j, "level", "estimate report").get<double>();
  const Json& ci = require_field(j, "ci", "estimate report");
  if (!ci.is_array() || ci.size() != 2) throw ParameterError("estimate report: ci must be [lo, hi]");
  r.ci_lo = ci[0].get<double>();
  r.ci_hi = ci[1].get<double>();
  r.n = require_field(j, "n", "estimate report").get<Eigen::Index>();
  r.folds = require_field(j, "folds", "estimate report").get<int>();
  r.seed = require_field(j, "seed", "estimate report").get<std::uint64_t>();
  r.diagnostics = get_or<Json>(j, "diagnostics", Json::object());
  r.config_hash_hex = get_or<std::string>(j, "config_hash", "");
  r.dataset_hash_hex = get_or<std::string>(j, "dataset_hash", "");
  if (j.contains("scores")) {
    const Json& s = j["scores"];
    r.scores.resize(static_cast<Eigen::Index>(s.size()));
    for (Eigen::Index i = 0; i < r.scores.size(); ++i)
      r.scores[i] = s[static_cast<std::size_t>(i)].get<double>();
  }
  return r;
}

}  // namespace elast
