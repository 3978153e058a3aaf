#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "elast/baseline.hpp"
#include "elast/crossfit.hpp"
#include "elast/dataset.hpp"
#include "elast/learners.hpp"
#include "elast/report.hpp"
#include "elast/rng.hpp"

// Cross-fitted debiased estimation of the average arithmetic semi-elasticity
// under heterogeneous coefficients. The per-observation score combines the
// out-of-fold log-linear slope, the conditional-mean tilt m'/m of the
// retransformation factor m(x,z) = E[e^u | x,z], and a density-score
// correction weight alpha = -s/m that removes first-order sensitivity to
// errors in the fitted nuisances. Averaging the score solves for the target
// because the score is affine in theta with slope -1.
namespace elast::dream {

// The score divides by the fitted conditional mean; predictions are floored
// here so the division stays bounded. Hitting the floor is counted as a
// diagnostic, never an error.
inline constexpr double kMeanFloor = 1e-3;

struct FoldNuisance {
  Eigen::VectorXd lin;          // [intercept, x, z...] out-of-fold log-linear fit
  learn::RegressorModel m_hat;  // E[e^u | x, z], inputs (x, z...)
  learn::ScoreModel s_hat;      // d/dx log f(x | z)
  std::vector<Eigen::Index> trained_rows;  // manifest of rows the fits saw

  double beta() const { return lin[1]; }

  double residual(double y, double x, const Eigen::VectorXd& z) const {
    if (!(y > 0.0)) throw ParameterError("score contribution: y must be positive");
    double idx = lin[0] + lin[1] * x;
    for (Eigen::Index j = 0; j < z.size(); ++j) idx += lin[2 + j] * z[j];
    return std::log(y) - idx;
  }

  Eigen::VectorXd feature(double x, const Eigen::VectorXd& z) const {
    Eigen::VectorXd f(1 + z.size());
    f[0] = x;
    f.tail(z.size()) = z;
    return f;
  }

  double mean_at(double x, const Eigen::VectorXd& z, bool* clamped = nullptr) const {
    const double raw = m_hat.value(feature(x, z));
    if (clamped) *clamped = raw < kMeanFloor;
    return std::max(raw, kMeanFloor);
  }

  // slope of the fitted conditional mean in the treatment direction; the
  // floor applies to the divided-by value only, not to the slope
  double mean_slope_at(double x, const Eigen::VectorXd& z) const {
    return learn::gradient_wrt_x(m_hat, feature(x, z), 1)[0];
  }
};

struct NuisanceSet {
  CrossFitPlan plan;
  std::vector<FoldNuisance> folds;

  const FoldNuisance& for_row(Eigen::Index i) const {
    return folds[static_cast<std::size_t>(plan.assignment[static_cast<std::size_t>(i)])];
  }
};

// theta estimating-equation contribution for one observation, evaluated with
// the supplied (out-of-fold) nuisances:
//   beta + m'/m - theta + alpha (e^u - m),  alpha = -s/m
inline double score_contribution(double y, double x, const Eigen::VectorXd& z,
                                 const FoldNuisance& nu, double theta,
                                 bool* clamped = nullptr) {
  const double u = nu.residual(y, x, z);
  const double m = nu.mean_at(x, z, clamped);
  const double mprime = nu.mean_slope_at(x, z);
  const double s = nu.s_hat.score(x, z);
  const double alpha = -s / m;
  return nu.beta() + mprime / m - theta + alpha * (std::exp(u) - m);
}

inline NuisanceSet fit_nuisances(const Dataset& d, const CrossFitPlan& plan,
                                 const learn::LearnerConfig& cfg) {
  d.validate();
  const Eigen::Index n = d.n();
  if (plan.n != n) throw ParameterError("fit_nuisances: plan built for a different sample size");
  const Eigen::MatrixXd W = baseline::detail::design_matrix(d);
  const std::vector<std::string> names = baseline::detail::design_names(d.controls.cols());
  const Eigen::VectorXd ly = baseline::detail::log_outcome(d, "fit_nuisances");

  const CounterRng seeder(cfg.seed);
  NuisanceSet out;
  out.plan = plan;
  out.folds.resize(static_cast<std::size_t>(plan.K));
  for (int k = 0; k < plan.K; ++k) {
    const std::vector<Eigen::Index> rows = plan.complement(k);
    const auto nk = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Wk(nk, W.cols());
    Eigen::VectorXd lyk(nk);
    for (Eigen::Index r = 0; r < nk; ++r) {
      Wk.row(r) = W.row(rows[static_cast<std::size_t>(r)]);
      lyk[r] = ly[rows[static_cast<std::size_t>(r)]];
    }
    baseline::detail::check_rank(Wk, names, "fit_nuisances");
    FoldNuisance nu;
    nu.lin = (Wk.transpose() * Wk).ldlt().solve(Wk.transpose() * lyk);
    const Eigen::VectorXd expu = (lyk - Wk * nu.lin).array().exp();
    const Eigen::MatrixXd feats = Wk.rightCols(W.cols() - 1);  // (x, z...) without the intercept

    learn::LearnerConfig cm = cfg;
    cm.seed = seeder.child("fit-m", static_cast<std::uint64_t>(k)).u64_at(0);
    learn::LearnerConfig cs = cfg;
    cs.seed = seeder.child("fit-score", static_cast<std::uint64_t>(k)).u64_at(0);
    try {
      nu.m_hat = learn::fit_regression(feats, expu, cm);
      nu.s_hat = learn::fit_conditional_score(feats.col(0), feats.rightCols(feats.cols() - 1), cs);
    } catch (const TrainingDivergedError& e) {
      throw TrainingDivergedError("fold " + std::to_string(k) + ": " + e.what());
    }
    nu.trained_rows = rows;
    out.folds[static_cast<std::size_t>(k)] = std::move(nu);
  }
  return out;
}

namespace detail {

inline Eigen::Index count_distinct(const Eigen::VectorXd& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  return static_cast<Eigen::Index>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

inline EstimateReport estimate(const Dataset& d, int K, const learn::LearnerConfig& cfg,
                               double level = 0.95) {
  d.validate();
  const Eigen::Index n = d.n();
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("estimate: level must lie in (0,1)");
  const Json cfg_json{{"method", "dream"}, {"k_folds", K}, {"level", level},
                      {"learner", learn::to_json(cfg)}};

  const Eigen::Index distinct = detail::count_distinct(d.x);
  if (distinct == 1) throw ParameterError("estimate: x is constant");
  if (distinct == 2) {
    const double lo = d.x.minCoeff(), hi = d.x.maxCoeff();
    if (lo != 0.0 || hi != 1.0)
      throw ParameterError(
          "estimate: x takes exactly two values (" + std::to_string(lo) + ", " +
          std::to_string(hi) + "); recode them as 0/1 to use the binary pathway");
    EstimateReport r = baseline::manning_binary(d, level);
    r.diagnostics["notice"] =
        "binary treatment detected: routed to the exact two-arm percentage-effect estimator";
    r.seed = cfg.seed;
    r.config_hash_hex = config_hash(cfg_json);
    r.dataset_hash_hex = dataset_hash(d);
    return r;
  }

  Json warnings = Json::array();
  if (distinct < 10)
    warnings.push_back("x takes only " + std::to_string(distinct) +
                       " distinct values; the conditional-density score is ill-posed on "
                       "discrete treatments - prefer the binary/discrete pathway");

  const CrossFitPlan plan = make_plan(n, K, cfg.seed);
  const NuisanceSet nuis = fit_nuisances(d, plan, cfg);

  std::vector<double> contrib(static_cast<std::size_t>(n));
  Eigen::Index clamp_hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool cl = false;
    const double c = score_contribution(d.y[i], d.x[i], d.controls.row(i).transpose(),
                                        nuis.for_row(i), 0.0, &cl);
    if (!std::isfinite(c))
      throw NonFiniteMomentError("estimate: non-finite score contribution at row " +
                                 std::to_string(i));
    contrib[static_cast<std::size_t>(i)] = c;
    clamp_hits += cl ? 1 : 0;
  }

  EstimateReport r;
  r.method = "dream";
  r.n = n;
  r.folds = K;
  r.seed = cfg.seed;
  r.level = level;
  r.theta_hat = pairwise_sum(contrib) / static_cast<double>(n);
  r.scores = Eigen::Map<const Eigen::VectorXd>(contrib.data(), n).array() - r.theta_hat;
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sq[static_cast<std::size_t>(i)] = r.scores[i] * r.scores[i];
  const double vhat = pairwise_sum(sq) / static_cast<double>(n);
  r.se = std::sqrt(vhat / static_cast<double>(n));
  r.finalize_ci();

  const double clamp_rate = static_cast<double>(clamp_hits) / static_cast<double>(n);
  if (clamp_rate > 0.10)
    warnings.push_back("conditional-mean floor engaged on more than 10% of observations; "
                       "the fitted m is close to zero over much of the sample");
  Json fold_sizes = Json::array(), m_loss = Json::array(), s_loss = Json::array();
  for (Eigen::Index s : plan.fold_sizes()) fold_sizes.push_back(s);
  for (const FoldNuisance& nu : nuis.folds) {
    m_loss.push_back(nu.m_hat.validation_loss);
    s_loss.push_back(nu.s_hat.net.validation_loss);
  }
  r.diagnostics = Json{{"fold_sizes", fold_sizes},
                       {"clamp_hits", clamp_hits},
                       {"clamp_rate", clamp_rate},
                       {"m_validation_loss", m_loss},
                       {"score_validation_loss", s_loss},
                       {"warnings", warnings}};
  r.config_hash_hex = config_hash(cfg_json);
  r.dataset_hash_hex = dataset_hash(d);
  return r;
}

// --- numeric orthogonality audit ------------------------------------------
//
// Psi(t) = mean over the sample of the score evaluated with one nuisance
// shifted by t times a fixed bounded direction (h = 0.1, constant in (x,z)).
// A locally robust score has Psi'(0) = 0 up to sampling noise, so the slope
// at zero should be dominated by the quadratic term; the plug-in form
// beta + m'/m lacks the correction and picks up a first-order slope.

enum class PerturbDirection { m, score, beta };
enum class ScoreForm { orthogonal, plug_in };

struct AuditResult {
  std::vector<double> psi;  // mean score at each grid point
  double slope0 = 0.0;      // dPsi/dt at t = 0
  double curvature = 0.0;   // d^2 Psi/dt^2 at t = 0
};

namespace detail {

inline double perturbed_contribution(double y, double x, const Eigen::VectorXd& z,
                                     const FoldNuisance& nu, PerturbDirection dir, double t,
                                     ScoreForm form) {
  constexpr double h = 0.1;  // constant direction
  double beta = nu.beta();
  double u = nu.residual(y, x, z);
  double m = nu.mean_at(x, z);
  const double mprime = nu.mean_slope_at(x, z);
  double s = nu.s_hat.score(x, z);
  switch (dir) {
    case PerturbDirection::m:
      m = std::max(m + t * h, 1e-12);
      break;
    case PerturbDirection::score:
      s += t * h;
      break;
    case PerturbDirection::beta:
      beta += t * h;
      u -= t * h * x;
      break;
  }
  if (form == ScoreForm::plug_in) return beta + mprime / m;
  return beta + mprime / m + (-s / m) * (std::exp(u) - m);
}

}  // namespace detail

inline AuditResult orthogonality_audit(const Dataset& d, const NuisanceSet& nuis,
                                       PerturbDirection dir, const std::vector<double>& t_grid,
                                       ScoreForm form = ScoreForm::orthogonal) {
  d.validate();
  const Eigen::Index n = d.n();
  if (nuis.plan.n != n)
    throw ParameterError("orthogonality_audit: nuisances built for a different sample size");
  if (t_grid.size() < 3)
    throw ParameterError("orthogonality_audit: need at least 3 grid points");

  AuditResult out;
  out.psi.reserve(t_grid.size());
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (const double t : t_grid) {
    for (Eigen::Index i = 0; i < n; ++i)
      buf[static_cast<std::size_t>(i)] = detail::perturbed_contribution(
          d.y[i], d.x[i], d.controls.row(i).transpose(), nuis.for_row(i), dir, t, form);
    out.psi.push_back(pairwise_sum(buf) / static_cast<double>(n));
  }

  // polynomial least squares over the grid; slope/curvature at zero. A cubic
  // (when the grid affords one) keeps Psi's genuine odd third-order term out
  // of the slope estimate; since every grid point is evaluated on the same
  // sample, the extra degree costs no variance.
  const auto g = static_cast<Eigen::Index>(t_grid.size());
  const Eigen::Index degree = g >= 4 ? 3 : 2;
  Eigen::MatrixXd V(g, degree + 1);
  Eigen::VectorXd p(g);
  for (Eigen::Index r = 0; r < g; ++r) {
    const double t = t_grid[static_cast<std::size_t>(r)];
    V(r, 0) = 1.0;
    for (Eigen::Index c = 1; c <= degree; ++c) V(r, c) = V(r, c - 1) * t;
    p[r] = out.psi[static_cast<std::size_t>(r)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < 3)
    throw ParameterError("orthogonality_audit: t_grid must contain at least 3 distinct points");
  if (qr.rank() < degree + 1) {
    // grid has exactly 3 distinct values; refit the quadratic
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(V.leftCols(3));
    const Eigen::VectorXd coef = qr2.solve(p);
    out.slope0 = coef[1];
    out.curvature = 2.0 * coef[2];
    return out;
  }
  const Eigen::VectorXd coef = qr.solve(p);
  out.slope0 = coef[1];
  out.curvature = 2.0 * coef[2];
  return out;
}

}  // namespace elast::dream
