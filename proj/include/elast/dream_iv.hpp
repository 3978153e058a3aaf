#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "elast/baseline.hpp"
#include "elast/crossfit.hpp"
#include "elast/dataset.hpp"
#include "elast/dream.hpp"
#include "elast/learners.hpp"
#include "elast/report.hpp"
#include "elast/rng.hpp"

// Control-function variant of the cross-fitted debiased estimator for the
// average semi-elasticity of the average structural function under a
// triangular first stage X = g(Z) + V with Z independent of V. Six nuisances
// are trained out of fold: the first stage g, the control-function
// coefficients (beta, rho) of log Y on (X, V), the retransformation mean
// m(x,v) = E[e^u | x,v], the density ratio omega = f_V / f_{V|X}, the marginal
// treatment score S_X = d/dx log f_X, and the first-stage correction weight
// lambda(z). The per-observation score is
//   beta + mu'(X)/mu(X) - theta
//     - omega(X,V) S_X(X) / mu(X) * (e^u - m(X,V))
//     - lambda(Z) * (X - g(Z)),
// where mu(x) averages m(x, .) over the pooled sample of fitted residuals.
namespace elast::dream_iv {

// floor applied to the averaged structural mean before division
inline constexpr double kAsfFloor = 1e-3;
// residual subsample size used for the mu divisor inside the correction-weight
// training targets; the weight itself only enters the correction term, so
// moderate approximation there is second order for the final estimate
inline constexpr Eigen::Index kLambdaMuSample = 512;
// classical rule of thumb: an implied first-stage F below this is weak
inline constexpr double kWeakFirstStageF = 10.0;

namespace detail {

// Batched forward pass returning both the prediction and its derivative with
// respect to one raw input column. The derivative propagates a tangent matrix
// through the same layers as the values, so it matches input_gradient exactly
// while amortizing the work over many rows.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_with_input_slope(
    const learn::MlpModel& m, const Eigen::MatrixXd& F, Eigen::Index col) {
  if (F.cols() != m.in_dim())
    throw ParameterError("predict_with_input_slope: feature width does not match the model");
  if (col < 0 || col >= F.cols())
    throw ParameterError("predict_with_input_slope: derivative column out of range");
  if (m.out_dim() != 1)
    throw ParameterError("predict_with_input_slope: model must have one output");
  Eigen::MatrixXd H = ((F.rowwise() - m.input_mean.transpose()).array().rowwise() /
                       m.input_scale.transpose().array())
                          .matrix();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(F.rows(), F.cols());
  T.col(col).setConstant(1.0 / m.input_scale[col]);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Eigen::MatrixXd P = H * m.weights[l].transpose();
    P.rowwise() += m.biases[l].transpose();
    Eigen::MatrixXd TP = T * m.weights[l].transpose();
    if (l + 1 < m.weights.size()) {
      T = learn::detail::silu_prime_batch(P).cwiseProduct(TP);
      H = learn::detail::silu_batch(P);
    } else {
      H = std::move(P);
      T = std::move(TP);
    }
  }
  return {H.col(0), T.col(0)};
}

}  // namespace detail

// --- first stage ------------------------------------------------------------

struct FirstStage {
  learn::RegressorModel g_hat;  // E[X | Z], inputs (z...)
  Eigen::VectorXd v_hat;        // residuals X - g(Z)
  double r2 = 0.0;              // fraction of treatment variance explained
  double implied_f = 0.0;       // R^2 (n-2) / (1 - R^2), the linear-case F analogue
  bool weak = false;
};

namespace detail {

inline double first_stage_r2(const Eigen::VectorXd& x, const Eigen::VectorXd& v_hat) {
  const double ss_tot = (x.array() - x.mean()).square().sum();
  if (!(ss_tot > 0.0)) throw ParameterError("first_stage: x is constant");
  return 1.0 - v_hat.squaredNorm() / ss_tot;
}

inline double implied_first_stage_f(double r2, Eigen::Index n) {
  const double denom = std::max(1.0 - r2, 1e-12);
  // Out-of-fold R^2 can dip below zero on irrelevant instruments; a negative
  // F has no meaning, so floor the statistic at zero (still flagged as weak).
  return std::max(r2, 0.0) * static_cast<double>(n - 2) / denom;
}

}  // namespace detail

inline FirstStage first_stage(const Dataset& d, const learn::LearnerConfig& cfg) {
  d.validate();
  if (d.n_instruments() < 1) throw ParameterError("first_stage: instruments are required");
  FirstStage out;
  out.g_hat = learn::fit_regression(d.instruments, d.x, cfg);
  out.v_hat = d.x - out.g_hat.predict(d.instruments).col(0);
  out.r2 = detail::first_stage_r2(d.x, out.v_hat);
  out.implied_f = detail::implied_first_stage_f(out.r2, d.n());
  out.weak = out.implied_f < kWeakFirstStageF;
  return out;
}

// --- average structural function ---------------------------------------------

struct AsfValue {
  double mu = 0.0;        // mean over the residual sample of m(x, v_j)
  double mu_prime = 0.0;  // mean of the treatment derivative of m at (x, v_j)
};

// Batched marginal integration: for every x in xs, average the outcome model
// and its treatment slope over the full residual sample. Rows are processed
// in fixed-size chunks so the activation matrices stay small; the chunking
// never changes which contiguous block a given x averages over, so results
// are independent of the chunk size.
inline void asf_batch(const learn::MlpModel& m, const Eigen::VectorXd& xs,
                      const Eigen::VectorXd& v_sample, Eigen::VectorXd& mu,
                      Eigen::VectorXd& mu_prime) {
  if (m.in_dim() != 2)
    throw ParameterError("asf: outcome model must take exactly (x, v) inputs");
  const Eigen::Index nx = xs.size(), J = v_sample.size();
  if (J < 1) throw ParameterError("asf: residual sample is empty");
  mu.resize(nx);
  mu_prime.resize(nx);
  const Eigen::Index block = std::max<Eigen::Index>(1, 131072 / J);
  Eigen::MatrixXd F(std::min(block, std::max<Eigen::Index>(nx, 1)) * J, 2);
  for (Eigen::Index lo = 0; lo < nx; lo += block) {
    const Eigen::Index b = std::min(block, nx - lo);
    for (Eigen::Index r = 0; r < b; ++r) {
      F.block(r * J, 0, J, 1).setConstant(xs[lo + r]);
      F.block(r * J, 1, J, 1) = v_sample;
    }
    const auto [vals, slopes] = detail::predict_with_input_slope(m, F.topRows(b * J), 0);
    for (Eigen::Index r = 0; r < b; ++r) {
      mu[lo + r] = vals.segment(r * J, J).mean();
      mu_prime[lo + r] = slopes.segment(r * J, J).mean();
    }
  }
}

// Marginal integration at a single treatment value. Works with any model
// exposing value() and input_gradient() over (x, v) points; the fitted-network
// type routes through the batched pass.
template <class Model>
inline AsfValue asf(const Model& m, double x, const Eigen::VectorXd& v_sample) {
  if constexpr (std::is_same_v<Model, learn::MlpModel>) {
    Eigen::VectorXd mu, mup;
    asf_batch(m, Eigen::VectorXd::Constant(1, x), v_sample, mu, mup);
    return {mu[0], mup[0]};
  } else {
    const Eigen::Index J = v_sample.size();
    if (J < 1) throw ParameterError("asf: residual sample is empty");
    std::vector<double> vals(static_cast<std::size_t>(J)), slopes(static_cast<std::size_t>(J));
    Eigen::VectorXd point(2);
    for (Eigen::Index j = 0; j < J; ++j) {
      point[0] = x;
      point[1] = v_sample[j];
      vals[static_cast<std::size_t>(j)] = m.value(point);
      slopes[static_cast<std::size_t>(j)] = m.input_gradient(point)[0];
    }
    const double nj = static_cast<double>(J);
    return {pairwise_sum(vals) / nj, pairwise_sum(slopes) / nj};
  }
}

// --- first-stage correction weight -------------------------------------------

// Learns lambda(z) = E[Lambda | Z = z], where Lambda_i is the pathwise
// derivative of observation i's score along a constant shift of the first
// stage: shifting g by +t lowers every residual by t, so
//   Lambda_i = d/dt phi_i(v_i - t) at t = 0,
// computed by a central difference with step h = step_fraction * sd(v). The
// callable phi(i, v) must evaluate the score terms that reach the first stage
// through observation i's own residual (the outcome residual, the
// retransformation mean, and the density-ratio weight); terms constant in v
// cancel from the difference and may be omitted.
template <class PhiFn>
inline learn::RegressorModel riesz_lambda(const Eigen::MatrixXd& z, const Eigen::VectorXd& v_hat,
                                          PhiFn&& phi, const learn::LearnerConfig& cfg,
                                          Eigen::VectorXd* targets_out = nullptr,
                                          double step_fraction = 1e-3) {
  const Eigen::Index n = v_hat.size();
  if (z.rows() != n) throw ParameterError("riesz_lambda: z/v row count mismatch");
  if (z.cols() < 1) throw ParameterError("riesz_lambda: z has no columns");
  if (!(step_fraction > 0.0)) throw ParameterError("riesz_lambda: step fraction must be > 0");
  const double sd = std::sqrt((v_hat.array() - v_hat.mean()).square().mean());
  if (!(sd > 0.0)) throw ParameterError("riesz_lambda: residuals are constant");
  const double h = step_fraction * sd;
  Eigen::VectorXd lam(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double up = phi(i, v_hat[i] - h);  // g shifted by +h
    const double dn = phi(i, v_hat[i] + h);  // g shifted by -h
    lam[i] = (up - dn) / (2.0 * h);
    if (!std::isfinite(lam[i]))
      throw NonFiniteMomentError("riesz_lambda: non-finite perturbation at row " +
                                 std::to_string(i));
  }
  if (targets_out) *targets_out = lam;
  return learn::fit_regression(z, lam, cfg);
}

// --- cross-fitted nuisances ---------------------------------------------------

struct IVFoldNuisance {
  learn::RegressorModel g_hat;       // E[X | Z]
  Eigen::VectorXd cf;                // [intercept, x, v] control-function fit
  learn::RegressorModel m_hat;       // E[e^u | x, v]
  learn::RatioModel omega_hat;       // f_V(v) / f_{V|X}(v|x)
  learn::ScoreModel sx_hat;          // d/dx log f_X(x)
  learn::RegressorModel lambda_hat;  // E[Lambda | z]
  Eigen::VectorXd v_all;             // this fold's residuals for every row
  double r2 = 0.0;                   // first-stage fit over all rows
  std::vector<Eigen::Index> trained_rows;  // manifest of rows the fits saw

  double beta() const { return cf[1]; }
  double rho() const { return cf[2]; }

  double residual(double y, double x, double v) const {
    if (!(y > 0.0)) throw ParameterError("score contribution: y must be positive");
    return std::log(y) - cf[0] - cf[1] * x - cf[2] * v;
  }

  double m_at(double x, double v) const {
    Eigen::VectorXd f(2);
    f[0] = x;
    f[1] = v;
    return m_hat.value(f);
  }
};

struct IVNuisanceSet {
  CrossFitPlan plan;
  std::vector<IVFoldNuisance> folds;

  const IVFoldNuisance& for_row(Eigen::Index i) const {
    return folds[static_cast<std::size_t>(plan.assignment[static_cast<std::size_t>(i)])];
  }
};

// theta estimating-equation contribution for one observation, with the
// averaged structural mean and slope supplied by the caller (they pool the
// whole residual sample, so they are computed in batch, not per row)
inline double score_contribution(double y, double x, const Eigen::VectorXd& z_row, double v,
                                 double mu, double mu_prime, const IVFoldNuisance& nu,
                                 double theta, bool* clamped = nullptr,
                                 bool* omega_clipped = nullptr) {
  const double u = nu.residual(y, x, v);
  if (clamped) *clamped = mu < kAsfFloor;
  const double mu_f = std::max(mu, kAsfFloor);
  Eigen::VectorXd xe(1);
  xe[0] = x;
  const double omega = nu.omega_hat.ratio(xe, v);
  if (omega_clipped) *omega_clipped = nu.omega_hat.clipped(xe, v);
  const double sx = nu.sx_hat.score(x);
  const double lambda = nu.lambda_hat.value(z_row);
  return nu.beta() + mu_prime / mu_f - theta -
         omega * sx / mu_f * (std::exp(u) - nu.m_at(x, v)) - lambda * v;
}

inline IVNuisanceSet fit_nuisances(const Dataset& d, const CrossFitPlan& plan,
                                   const learn::LearnerConfig& cfg) {
  d.validate();
  const Eigen::Index n = d.n();
  if (plan.n != n) throw ParameterError("fit_nuisances: plan built for a different sample size");
  if (d.n_instruments() < 1) throw ParameterError("fit_nuisances: instruments are required");
  if (d.n_controls() > 0)
    throw ParameterError(
        "fit_nuisances: control columns are not supported by the instrumental-variables "
        "estimator; remove them or residualize beforehand");
  const Eigen::VectorXd ly = baseline::detail::log_outcome(d, "fit_nuisances");

  const CounterRng seeder(cfg.seed);
  IVNuisanceSet out;
  out.plan = plan;
  out.folds.resize(static_cast<std::size_t>(plan.K));
  for (int k = 0; k < plan.K; ++k) {
    const std::vector<Eigen::Index> rows = plan.complement(k);
    const auto nk = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Zk(nk, d.n_instruments());
    Eigen::VectorXd xk(nk), lyk(nk);
    for (Eigen::Index r = 0; r < nk; ++r) {
      const Eigen::Index i = rows[static_cast<std::size_t>(r)];
      Zk.row(r) = d.instruments.row(i);
      xk[r] = d.x[i];
      lyk[r] = ly[i];
    }

    IVFoldNuisance nu;
    auto child_seed = [&](const char* tag) {
      return seeder.child(tag, static_cast<std::uint64_t>(k)).u64_at(0);
    };
    try {
      learn::LearnerConfig cg = cfg;
      cg.seed = child_seed("fit-g");
      nu.g_hat = learn::fit_regression(Zk, xk, cg);
      nu.v_all = d.x - nu.g_hat.predict(d.instruments).col(0);
      nu.r2 = detail::first_stage_r2(d.x, nu.v_all);

      Eigen::VectorXd vk(nk);
      for (Eigen::Index r = 0; r < nk; ++r) vk[r] = nu.v_all[rows[static_cast<std::size_t>(r)]];

      // control-function coefficients: log y on [1, x, v]
      Eigen::MatrixXd Wk(nk, 3);
      Wk.col(0).setOnes();
      Wk.col(1) = xk;
      Wk.col(2) = vk;
      baseline::detail::check_rank(Wk, {"intercept", "x", "v"}, "fit_nuisances");
      nu.cf = (Wk.transpose() * Wk).ldlt().solve(Wk.transpose() * lyk);
      const Eigen::VectorXd expu = (lyk - Wk * nu.cf).array().exp();

      Eigen::MatrixXd feats(nk, 2);
      feats.col(0) = xk;
      feats.col(1) = vk;
      learn::LearnerConfig cm = cfg;
      cm.seed = child_seed("fit-m");
      nu.m_hat = learn::fit_regression(feats, expu, cm);

      learn::LearnerConfig co = cfg;
      co.seed = child_seed("fit-omega");
      nu.omega_hat = learn::fit_density_ratio(vk, xk, co);

      learn::LearnerConfig cs = cfg;
      cs.seed = child_seed("fit-sx");
      nu.sx_hat = learn::fit_marginal_score(xk, cs);

      // correction-weight targets: the mu divisor averages the outcome model
      // over an evenly strided subsample of the pooled residuals
      const Eigen::Index nsub = std::min<Eigen::Index>(kLambdaMuSample, n);
      Eigen::VectorXd v_sub(nsub);
      for (Eigen::Index j = 0; j < nsub; ++j) v_sub[j] = nu.v_all[j * n / nsub];
      Eigen::VectorXd mu_k, mup_k;
      asf_batch(nu.m_hat, xk, v_sub, mu_k, mup_k);

      auto phi_through_v = [&](Eigen::Index r, double v) {
        const double x = xk[r];
        const double u = lyk[r] - nu.cf[0] - nu.cf[1] * x - nu.cf[2] * v;
        Eigen::VectorXd xe(1);
        xe[0] = x;
        const double omega = nu.omega_hat.ratio(xe, v);
        const double sx = nu.sx_hat.score(x);
        const double mu_f = std::max(mu_k[r], kAsfFloor);
        return -omega * sx / mu_f * (std::exp(u) - nu.m_at(x, v));
      };
      learn::LearnerConfig cl = cfg;
      cl.seed = child_seed("fit-lambda");
      nu.lambda_hat = riesz_lambda(Zk, vk, phi_through_v, cl);
    } catch (const TrainingDivergedError& e) {
      throw TrainingDivergedError("fold " + std::to_string(k) + ": " + e.what());
    }
    nu.trained_rows = rows;
    out.folds[static_cast<std::size_t>(k)] = std::move(nu);
  }
  return out;
}

inline EstimateReport estimate_iv(const Dataset& d, int K, const learn::LearnerConfig& cfg,
                                  double level = 0.95) {
  d.validate();
  const Eigen::Index n = d.n();
  if (!(level > 0.0 && level < 1.0))
    throw ParameterError("estimate_iv: level must lie in (0,1)");
  if (d.n_instruments() < 1) throw ParameterError("estimate_iv: instruments are required");
  const Json cfg_json{{"method", "dream_iv"}, {"k_folds", K}, {"level", level},
                      {"learner", learn::to_json(cfg)}};

  const Eigen::Index distinct = dream::detail::count_distinct(d.x);
  if (distinct == 1) throw ParameterError("estimate_iv: x is constant");
  if (distinct == 2)
    throw ParameterError(
        "estimate_iv: x takes exactly two values; the continuous control-function estimator "
        "does not cover binary treatments");

  Json warnings = Json::array();
  if (distinct < 10)
    warnings.push_back("x takes only " + std::to_string(distinct) +
                       " distinct values; the marginal treatment score is ill-posed on "
                       "discrete treatments");

  const CrossFitPlan plan = make_plan(n, K, cfg.seed);
  const IVNuisanceSet nuis = fit_nuisances(d, plan, cfg);

  std::vector<double> contrib(static_cast<std::size_t>(n));
  Eigen::Index clamp_hits = 0, clip_hits = 0;
  std::vector<double> lam_abs(static_cast<std::size_t>(n));
  for (int k = 0; k < plan.K; ++k) {
    const std::vector<Eigen::Index> in_fold = plan.fold(k);
    const IVFoldNuisance& nu = nuis.folds[static_cast<std::size_t>(k)];
    const auto fn = static_cast<Eigen::Index>(in_fold.size());
    Eigen::VectorXd xs(fn);
    for (Eigen::Index r = 0; r < fn; ++r) xs[r] = d.x[in_fold[static_cast<std::size_t>(r)]];
    Eigen::VectorXd mu_k, mup_k;
    asf_batch(nu.m_hat, xs, nu.v_all, mu_k, mup_k);
    for (Eigen::Index r = 0; r < fn; ++r) {
      const Eigen::Index i = in_fold[static_cast<std::size_t>(r)];
      bool cl = false, clip = false;
      const double c =
          score_contribution(d.y[i], d.x[i], d.instruments.row(i).transpose(), nu.v_all[i],
                             mu_k[r], mup_k[r], nu, 0.0, &cl, &clip);
      if (!std::isfinite(c))
        throw NonFiniteMomentError("estimate_iv: non-finite score contribution at row " +
                                   std::to_string(i));
      contrib[static_cast<std::size_t>(i)] = c;
      clamp_hits += cl ? 1 : 0;
      clip_hits += clip ? 1 : 0;
      lam_abs[static_cast<std::size_t>(i)] =
          std::fabs(nu.lambda_hat.value(d.instruments.row(i).transpose()));
    }
  }

  EstimateReport r;
  r.method = "dream_iv";
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

  // first-stage strength: pooled R^2 of the per-fold residuals each row was
  // scored with, mapped to the linear-case F analogue
  Eigen::VectorXd v_scored(n);
  for (Eigen::Index i = 0; i < n; ++i) v_scored[i] = nuis.for_row(i).v_all[i];
  const double r2 = detail::first_stage_r2(d.x, v_scored);
  const double implied_f = detail::implied_first_stage_f(r2, n);
  if (implied_f < kWeakFirstStageF)
    warnings.push_back("weak first stage: the instruments explain too little treatment "
                       "variation (implied F = " + std::to_string(implied_f) + ")");

  // Informal overlap check: within each residual-quantile bin, how much does
  // the fitted instrument index move the treatment? A degenerate range in some
  // bin means the counterfactual average extrapolates there.
  Json g_range = Json::array();
  {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v_scored[a] < v_scored[b]; });
    const int bins = 5;
    for (int b = 0; b < bins; ++b) {
      const Eigen::Index lo = n * b / bins, hi = n * (b + 1) / bins;
      if (lo >= hi) continue;
      double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
      for (Eigen::Index j = lo; j < hi; ++j) {
        const double g = d.x[order[j]] - v_scored[order[j]];
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
      }
      g_range.push_back(Json::array({gmin, gmax}));
    }
  }

  const double clamp_rate = static_cast<double>(clamp_hits) / static_cast<double>(n);
  const double clip_rate = static_cast<double>(clip_hits) / static_cast<double>(n);
  if (clamp_rate > 0.10)
    warnings.push_back("structural-mean floor engaged on more than 10% of observations");
  if (clip_rate > 0.10)
    warnings.push_back("density-ratio clipping engaged on more than 10% of observations; "
                       "the residual support may shift sharply with the treatment");

  double beta_mean = 0.0, rho_mean = 0.0;
  Json fold_sizes = Json::array(), fold_r2 = Json::array();
  Json g_loss = Json::array(), m_loss = Json::array(), s_loss = Json::array(),
       l_loss = Json::array();
  for (Eigen::Index s : plan.fold_sizes()) fold_sizes.push_back(s);
  for (const IVFoldNuisance& nu : nuis.folds) {
    beta_mean += nu.beta() / static_cast<double>(plan.K);
    rho_mean += nu.rho() / static_cast<double>(plan.K);
    fold_r2.push_back(nu.r2);
    g_loss.push_back(nu.g_hat.validation_loss);
    m_loss.push_back(nu.m_hat.validation_loss);
    s_loss.push_back(nu.sx_hat.net.validation_loss);
    l_loss.push_back(nu.lambda_hat.validation_loss);
  }
  r.diagnostics = Json{{"fold_sizes", fold_sizes},
                       {"first_stage_R2", r2},
                       {"first_stage_implied_F", implied_f},
                       {"first_stage_R2_by_fold", fold_r2},
                       {"omega_clip_rate", clip_rate},
                       {"omega_clip_hits", clip_hits},
                       {"lambda_norm", pairwise_sum(lam_abs) / static_cast<double>(n)},
                       {"g_range_by_v_quantile", g_range},
                       {"clamp_hits", clamp_hits},
                       {"clamp_rate", clamp_rate},
                       {"cf_beta_mean", beta_mean},
                       {"cf_rho_mean", rho_mean},
                       {"g_validation_loss", g_loss},
                       {"m_validation_loss", m_loss},
                       {"score_validation_loss", s_loss},
                       {"lambda_validation_loss", l_loss},
                       {"warnings", warnings}};
  r.config_hash_hex = config_hash(cfg_json);
  r.dataset_hash_hex = dataset_hash(d);
  return r;
}

}  // namespace elast::dream_iv
