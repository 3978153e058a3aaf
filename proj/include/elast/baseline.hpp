#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "elast/dataset.hpp"
#include "elast/report.hpp"

// Reference estimators: log-linear OLS, Poisson pseudo-ML, the binary
// smearing ratio, and two-stage least squares. All report heteroskedasticity
// robust (HC1) covariance and per-observation influence columns whose means
// vanish at the fit.
namespace elast::baseline {

struct FitResult {
  std::vector<std::string> names;  // intercept first, then x, then controls
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd vcov_robust;  // HC1 sandwich
  Eigen::MatrixXd influence;    // n x p, coef ~ truth + colwise mean
  Eigen::VectorXd residuals;    // working scale
  std::string estimator_tag;
  bool converged = true;
  int iterations = 0;
  std::optional<double> first_stage_F;
  std::vector<std::string> warnings;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw ParameterError("fit result: no coefficient named '" + name + "'");
  }
  double coef(const std::string& name) const {
    return coefficients[index_of(name)];
  }
  double se(const std::string& name) const {
    const int i = index_of(name);
    return std::sqrt(vcov_robust(i, i));
  }
};

namespace detail {

inline std::vector<std::string> design_names(Eigen::Index k, const char* zprefix = "z") {
  std::vector<std::string> names{"intercept", "x"};
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(zprefix + std::to_string(j + 1));
  return names;
}

inline Eigen::MatrixXd design_matrix(const Dataset& d) {
  Eigen::MatrixXd W(d.n(), 2 + d.n_controls());
  W.col(0).setOnes();
  W.col(1) = d.x;
  if (d.n_controls() > 0) W.rightCols(d.n_controls()) = d.controls;
  return W;
}

inline void check_rank(const Eigen::MatrixXd& W, const std::vector<std::string>& names,
                       const std::string& who) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  qr.setThreshold(1e-10);
  if (qr.rank() < W.cols()) {
    // columns permuted to the back are the linearly dependent ones
    const auto perm = qr.colsPermutation().indices();
    const auto bad = static_cast<std::size_t>(perm[W.cols() - 1]);
    throw SingularDesignError(names.at(bad) + " (" + who + ")");
  }
}

// HC1 sandwich and influence for a linear score  sum_i w_i r_i = 0 with
// bread B = (sum_i h_i w_i w_i')^{-1}: influence rows n B w_i r_i
struct Sandwich {
  Eigen::MatrixXd vcov;
  Eigen::MatrixXd influence;
};
inline Sandwich sandwich(const Eigen::MatrixXd& W, const Eigen::VectorXd& resid,
                         const Eigen::VectorXd& curvature_weights) {
  const Eigen::Index n = W.rows(), p = W.cols();
  Eigen::MatrixXd bread_inv =
      (W.transpose() * curvature_weights.asDiagonal() * W / static_cast<double>(n));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(bread_inv);
  Sandwich s;
  s.influence = ldlt.solve((W.array().colwise() * resid.array()).matrix().transpose()).transpose();
  Eigen::MatrixXd meat = s.influence.transpose() * s.influence / static_cast<double>(n);
  const double dof = n > p ? static_cast<double>(n) / static_cast<double>(n - p) : 1.0;
  s.vcov = meat / static_cast<double>(n) * dof;
  return s;
}

inline Eigen::VectorXd log_outcome(const Dataset& d, const char* who) {
  Eigen::VectorXd ly(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (!(d.y[i] > 0.0))
      throw ParameterError(std::string(who) + ": y must be strictly positive for a log fit (row " +
                           std::to_string(i) + ")");
    ly[i] = std::log(d.y[i]);
  }
  return ly;
}

}  // namespace detail

inline FitResult ols_loglog(const Dataset& d) {
  d.validate();
  const Eigen::VectorXd ly = detail::log_outcome(d, "ols_loglog");
  const Eigen::MatrixXd W = detail::design_matrix(d);
  FitResult f;
  f.names = detail::design_names(d.n_controls());
  f.estimator_tag = "ols_loglog";
  if (W.rows() <= W.cols()) throw ParameterError("ols_loglog: need n > number of coefficients");
  detail::check_rank(W, f.names, "ols_loglog");
  f.coefficients = (W.transpose() * W).ldlt().solve(W.transpose() * ly);
  f.residuals = ly - W * f.coefficients;
  auto s = detail::sandwich(W, f.residuals, Eigen::VectorXd::Ones(W.rows()));
  f.vcov_robust = std::move(s.vcov);
  f.influence = std::move(s.influence);
  return f;
}

// Poisson pseudo-likelihood: solves sum_i (y_i - exp(w_i'g)) w_i = 0.
// Newton with step halving from g = (log mean y, 0, ...); after the score
// tolerance triggers, one extra full step is taken so quadratic convergence
// leaves the root accurate to machine precision.
inline FitResult ppml(const Dataset& d, double tol = 1e-8, int max_iter = 100) {
  d.validate();
  const Eigen::MatrixXd W = detail::design_matrix(d);
  const Eigen::Index n = W.rows(), p = W.cols();
  FitResult f;
  f.names = detail::design_names(d.n_controls());
  f.estimator_tag = "ppml";
  if (n <= p) throw ParameterError("ppml: need n > number of coefficients");
  detail::check_rank(W, f.names, "ppml");
  const double ybar = d.y.mean();
  if (!(ybar > 0.0)) throw ParameterError("ppml: mean of y must be positive");

  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  g[0] = std::log(ybar);
  auto loglik = [&](const Eigen::VectorXd& gamma, Eigen::VectorXd& mu) {
    mu = (W * gamma).array().exp();
    return (d.y.array() * (W * gamma).array()).sum() - mu.sum();
  };
  Eigen::VectorXd mu;
  double ll = loglik(g, mu);
  bool hit_tol = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd score = W.transpose() * (d.y - mu);
    if (score.cwiseAbs().maxCoeff() / static_cast<double>(n) < tol) {
      if (hit_tol) break;  // polish step already done
      hit_tol = true;
    }
    const Eigen::MatrixXd H = W.transpose() * mu.asDiagonal() * W;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw ConvergenceError("ppml: singular curvature at iteration " + std::to_string(it));
    const Eigen::VectorXd step = ldlt.solve(score);
    if (!step.allFinite()) throw ConvergenceError("ppml: non-finite step");
    if (step.cwiseAbs().maxCoeff() > 1e3)
      throw SeparationError(
          "ppml: diverging step; a regressor separates the outcome (empty or "
          "all-zero arm)");
    double scale = 1.0;
    Eigen::VectorXd g_new, mu_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 40; ++h) {
      g_new = g + scale * step;
      ll_new = loglik(g_new, mu_new);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12) break;
      scale *= 0.5;
    }
    if (!std::isfinite(ll_new)) throw ConvergenceError("ppml: line search failed");
    g = g_new;
    mu = mu_new;
    ll = ll_new;
    if (g.cwiseAbs().maxCoeff() > 30.0)
      throw SeparationError("ppml: coefficient diverging beyond exp(30); separation suspected");
  }
  f.coefficients = g;
  f.iterations = it;
  const Eigen::VectorXd score = W.transpose() * (d.y - mu);
  f.converged = score.cwiseAbs().maxCoeff() / static_cast<double>(n) < tol;
  if (!f.converged)
    throw ConvergenceError("ppml: no convergence after " + std::to_string(max_iter) +
                           " iterations");
  f.residuals = d.y - mu;
  auto s = detail::sandwich(W, f.residuals, mu);
  f.vcov_robust = std::move(s.vcov);
  f.influence = std::move(s.influence);
  return f;
}

// percentage effect from arm means: ybar1/ybar0 - 1. For binary designs this
// equals the smearing-corrected log-linear estimate and exp(ppml coef) - 1.
inline EstimateReport manning_binary(const Dataset& d, double level = 0.95) {
  d.validate();
  Eigen::Index n1 = 0, n0 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.x[i] == 1.0)
      ++n1;
    else if (d.x[i] == 0.0)
      ++n0;
    else
      throw ParameterError("manning_binary: x must be exactly 0/1");
  }
  if (n1 == 0 || n0 == 0) throw ParameterError("manning_binary: both treatment arms must be non-empty");
  double s1 = 0, s0 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) (d.x[i] == 1.0 ? s1 : s0) += d.y[i];
  const double m1 = s1 / static_cast<double>(n1), m0 = s0 / static_cast<double>(n0);
  if (!(m0 > 0.0)) throw ParameterError("manning_binary: control-arm mean must be positive");
  const double p1 = static_cast<double>(n1) / static_cast<double>(d.n());
  const double p0 = 1.0 - p1;

  EstimateReport r;
  r.method = "manning_binary";
  r.n = d.n();
  r.level = level;
  r.theta_hat = m1 / m0 - 1.0;
  r.scores.resize(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double g1 = d.x[i] == 1.0 ? (d.y[i] - m1) / p1 : 0.0;
    const double g0 = d.x[i] == 0.0 ? (d.y[i] - m0) / p0 : 0.0;
    r.scores[i] = g1 / m0 - m1 * g0 / (m0 * m0);
  }
  r.se = std::sqrt(r.scores.squaredNorm() / static_cast<double>(d.n())) /
         std::sqrt(static_cast<double>(d.n()));
  r.finalize_ci();
  r.diagnostics = Json{{"arm_means", Json::array({m0, m1})},
                       {"arm_sizes", Json::array({n0, n1})}};
  return r;
}

// two-stage least squares for log y on [1, x, controls] with instruments
// [1, iv.., controls]; reports the classical first-stage F for the excluded
// instruments and flags F < 1
inline FitResult tsls(const Dataset& d, double level = 0.95) {
  (void)level;
  d.validate();
  if (d.n_instruments() < 1) throw ParameterError("tsls: at least one instrument column required");
  const Eigen::VectorXd ly = detail::log_outcome(d, "tsls");
  const Eigen::Index n = d.n(), k = d.n_controls(), m = d.n_instruments();
  Eigen::MatrixXd W = detail::design_matrix(d);
  Eigen::MatrixXd M(n, 1 + m + k);
  M.col(0).setOnes();
  M.middleCols(1, m) = d.instruments;
  if (k > 0) M.rightCols(k) = d.controls;

  FitResult f;
  f.names = detail::design_names(k);
  f.estimator_tag = "tsls";
  if (n <= W.cols() || n <= M.cols()) throw ParameterError("tsls: not enough rows");
  std::vector<std::string> mnames{"intercept"};
  for (Eigen::Index j = 0; j < m; ++j) mnames.push_back("iv" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < k; ++j) mnames.push_back("z" + std::to_string(j + 1));
  detail::check_rank(M, mnames, "tsls instruments");

  // first stage: x on M, classical F for the excluded instruments
  Eigen::LDLT<Eigen::MatrixXd> mm((M.transpose() * M));
  const Eigen::VectorXd pi = mm.solve(M.transpose() * d.x);
  const double rss_u = (d.x - M * pi).squaredNorm();
  Eigen::MatrixXd R(n, 1 + k);  // restricted: intercept + controls
  R.col(0).setOnes();
  if (k > 0) R.rightCols(k) = d.controls;
  const Eigen::VectorXd pr = (R.transpose() * R).ldlt().solve(R.transpose() * d.x);
  const double rss_r = (d.x - R * pr).squaredNorm();
  const double dof = static_cast<double>(n - M.cols());
  const double F = rss_u > 0.0
                       ? ((rss_r - rss_u) / static_cast<double>(m)) / (rss_u / dof)
                       : std::numeric_limits<double>::infinity();
  f.first_stage_F = F;
  if (F < 1.0) f.warnings.push_back("weak instrument: first-stage F < 1");

  const Eigen::MatrixXd What = M * mm.solve(M.transpose() * W);
  detail::check_rank(What, f.names, "tsls projected design");
  // What'W = What'What (projection), symmetric positive definite
  Eigen::MatrixXd bread = What.transpose() * W / static_cast<double>(n);
  Eigen::LDLT<Eigen::MatrixXd> bldlt(bread);
  f.coefficients = bldlt.solve(What.transpose() * ly / static_cast<double>(n));
  f.residuals = ly - W * f.coefficients;  // structural residual
  Eigen::MatrixXd scores = (What.array().colwise() * f.residuals.array()).matrix();
  f.influence = bldlt.solve(scores.transpose()).transpose();
  Eigen::MatrixXd meat = f.influence.transpose() * f.influence / static_cast<double>(n);
  const double hc1 = n > W.cols() ? static_cast<double>(n) / static_cast<double>(n - W.cols()) : 1.0;
  f.vcov_robust = meat / static_cast<double>(n) * hc1;
  return f;
}

// exact decomposition of the count-model coefficient on a binary regressor:
// gamma1 = (log-scale coefficient) + log mean(e^u | x=1) - log mean(e^u | x=0).
// Returns the absolute residual of that identity on the given data.
inline double binary_mapping_check(const Dataset& d) {
  d.validate();
  for (Eigen::Index i = 0; i < d.n(); ++i)
    if (d.x[i] != 0.0 && d.x[i] != 1.0)
      throw ParameterError("binary_mapping_check: x must be exactly 0/1");
  Dataset plain;  // saturated binary fit, controls deliberately excluded
  plain.y = d.y;
  plain.x = d.x;
  plain.controls.resize(d.n(), 0);
  plain.instruments.resize(d.n(), 0);
  const FitResult lin = ols_loglog(plain);
  const FitResult count = ppml(plain);
  double s1 = 0, s0 = 0;
  Eigen::Index n1 = 0, n0 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double eu = std::exp(lin.residuals[i]);
    if (d.x[i] == 1.0) {
      s1 += eu;
      ++n1;
    } else {
      s0 += eu;
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw ParameterError("binary_mapping_check: both arms must be non-empty");
  const double mapped = lin.coef("x") + std::log(s1 / static_cast<double>(n1)) -
                        std::log(s0 / static_cast<double>(n0));
  return std::fabs(count.coef("x") - mapped);
}

}  // namespace elast::baseline
