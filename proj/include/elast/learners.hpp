#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "elast/common.hpp"
#include "elast/jsonio.hpp"
#include "elast/rng.hpp"

// Small feed-forward learners used for nuisance estimation: a regressor with
// exact input gradients, denoising score estimators for conditional and
// marginal density scores, and a classifier-based density-ratio model.
// Training is full-batch with adaptive per-parameter step sizes and early
// stopping on a validation split; everything is deterministic given the seed.
namespace elast::learn {

struct LearnerConfig {
  std::vector<int> hidden{64, 64};
  double learning_rate = 0.02;
  // Decoupled shrinkage of weight matrices. The default is strong on purpose:
  // denoising targets carry unit-variance noise around a low-variance signal,
  // and heavy decay prunes the noise-driven wiggles that survive early
  // stopping, while high signal-to-noise fits sustain their weights through
  // the gradient flow.
  double weight_decay = 1.0;
  int max_epochs = 2000;
  // Validation improvements on noisy objectives arrive in bursts separated by
  // long dry spells; a short fuse returns a barely-trained net.
  int patience = 100;
  double val_fraction = 0.2;
  int dsm_replicates = 1;  // antithetic noise pairs per observation and scale
  std::uint64_t seed = 0;
};

inline Json to_json(const LearnerConfig& c) {
  return Json{{"hidden", c.hidden},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"val_fraction", c.val_fraction},
              {"dsm_replicates", c.dsm_replicates},
              {"seed", c.seed}};
}

inline LearnerConfig learner_config_from_json(const Json& j) {
  check_keys(j, {"hidden", "learning_rate", "weight_decay", "max_epochs", "patience",
                 "val_fraction", "dsm_replicates", "seed"},
             "learner config");
  LearnerConfig c;
  c.hidden = get_or<std::vector<int>>(j, "hidden", c.hidden);
  c.learning_rate = get_or<double>(j, "learning_rate", c.learning_rate);
  c.weight_decay = get_or<double>(j, "weight_decay", c.weight_decay);
  c.max_epochs = get_or<int>(j, "max_epochs", c.max_epochs);
  c.patience = get_or<int>(j, "patience", c.patience);
  c.val_fraction = get_or<double>(j, "val_fraction", c.val_fraction);
  c.dsm_replicates = get_or<int>(j, "dsm_replicates", c.dsm_replicates);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

namespace detail {

inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}
inline double silu(double a) { return a * sigmoid(a); }
inline double silu_prime(double a) {
  const double s = sigmoid(a);
  return s * (1.0 + a * (1.0 - s));
}

// vectorized forms for batch training (Eigen's packet exp)
inline Eigen::MatrixXd silu_batch(const Eigen::MatrixXd& A) {
  return (A.array() / (1.0 + (-A.array()).exp())).matrix();
}
inline Eigen::MatrixXd silu_prime_batch(const Eigen::MatrixXd& A) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-A.array()).exp());
  return (s * (1.0 + A.array() * (1.0 - s))).matrix();
}

}  // namespace detail

// Fitted multilayer perceptron. Hidden layers use the sigmoid-weighted linear
// unit (twice differentiable, so input gradients of the fit are smooth);
// the output layer is affine. Inputs are standardized per feature; the
// stored weights already fold any target scaling back in, so predictions are
// on the raw target scale (target transform tag: identity).
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps in_l -> out_l, (out_l x in_l)
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean, input_scale;
  std::string activation{"silu"};
  std::string target_transform{"identity"};
  double validation_loss = std::numeric_limits<double>::quiet_NaN();
  int epochs_run = 0;

  Eigen::Index in_dim() const { return weights.front().cols(); }
  Eigen::Index out_dim() const { return weights.back().rows(); }
  std::size_t n_layers() const { return weights.size(); }

  // batch forward pass; rows of X are points on the raw input scale
  Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd H = ((X.rowwise() - input_mean.transpose()).array().rowwise() /
                         input_scale.transpose().array())
                            .matrix();
    for (std::size_t l = 0; l < weights.size(); ++l) {
      H = ((H * weights[l].transpose()).rowwise() + biases[l].transpose()).eval();
      if (l + 1 < weights.size()) H = detail::silu_batch(H);
    }
    return H;
  }

  Eigen::VectorXd predict_one(const Eigen::VectorXd& point) const {
    Eigen::VectorXd h = (point - input_mean).cwiseQuotient(input_scale);
    for (std::size_t l = 0; l < weights.size(); ++l) {
      h = (weights[l] * h + biases[l]).eval();
      if (l + 1 < weights.size()) h = h.unaryExpr(&detail::silu);
    }
    return h;
  }

  double value(const Eigen::VectorXd& point) const { return predict_one(point)[0]; }

  // exact derivative of the fitted map at one point, chained through the
  // input standardization: rows index outputs, columns raw inputs
  Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& point) const {
    std::vector<Eigen::VectorXd> pre;  // pre-activations of hidden layers
    Eigen::VectorXd h = (point - input_mean).cwiseQuotient(input_scale);
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
      Eigen::VectorXd a = weights[l] * h + biases[l];
      pre.push_back(a);
      h = a.unaryExpr(&detail::silu);
    }
    Eigen::MatrixXd J = weights.back();
    for (std::size_t l = weights.size() - 1; l-- > 0;)
      J = (J * pre[l].unaryExpr(&detail::silu_prime).asDiagonal()) * weights[l];
    return J * input_scale.cwiseInverse().asDiagonal();
  }

  Eigen::VectorXd input_gradient(const Eigen::VectorXd& point) const {
    if (out_dim() != 1)
      throw ParameterError("input_gradient: model has more than one output; use input_jacobian");
    return input_jacobian(point).row(0).transpose();
  }
};

// derivative of a scalar-output model with respect to the leading treatment
// coordinates of the feature vector (features are assembled as [x, z...])
inline Eigen::VectorXd gradient_wrt_x(const MlpModel& model, const Eigen::VectorXd& point,
                                      Eigen::Index n_x = 1) {
  if (n_x < 1 || n_x > model.in_dim())
    throw ParameterError("gradient_wrt_x: treatment coordinate count out of range");
  return model.input_gradient(point).head(n_x);
}

namespace detail {

enum class LossKind { squared, logistic };

struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  long t = 0;
};

// full-batch training core shared by all learner kinds
inline MlpModel fit_mlp(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                        const LearnerConfig& cfg, LossKind loss, Eigen::Index min_rows,
                        const char* who) {
  const Eigen::Index n = X.rows(), d = X.cols(), out = T.cols();
  if (n < min_rows)
    throw ParameterError(std::string(who) + ": needs at least " + std::to_string(min_rows) +
                         " rows, got " + std::to_string(n));
  if (T.rows() != n) throw ParameterError(std::string(who) + ": feature/target row mismatch");
  if (d < 1 || out < 1) throw ParameterError(std::string(who) + ": empty feature or target");
  if (!X.allFinite() || !T.allFinite())
    throw ParameterError(std::string(who) + ": non-finite entries in features or targets");
  if (cfg.max_epochs < 1 || cfg.patience < 1)
    throw ParameterError(std::string(who) + ": max_epochs and patience must be positive");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0))
    throw ParameterError(std::string(who) + ": val_fraction must lie in (0,1)");
  if (!(cfg.learning_rate > 0.0))
    throw ParameterError(std::string(who) + ": learning_rate must be positive");
  if (cfg.weight_decay < 0.0)
    throw ParameterError(std::string(who) + ": weight_decay must be non-negative");
  for (int h : cfg.hidden)
    if (h < 1) throw ParameterError(std::string(who) + ": hidden widths must be positive");

  MlpModel model;
  model.input_mean = X.colwise().mean();
  model.input_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((X.col(j).array() - model.input_mean[j]).square().mean());
    model.input_scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  Eigen::MatrixXd Xs = ((X.rowwise() - model.input_mean.transpose()).array().rowwise() /
                        model.input_scale.transpose().array())
                           .matrix();

  // squared loss trains against standardized targets; the scaling is folded
  // back into the output layer afterwards so the stored model is raw-scale
  Eigen::VectorXd t_mean = Eigen::VectorXd::Zero(out), t_scale = Eigen::VectorXd::Ones(out);
  Eigen::MatrixXd Ts = T;
  if (loss == LossKind::squared) {
    t_mean = T.colwise().mean();
    for (Eigen::Index j = 0; j < out; ++j) {
      const double sd = std::sqrt((T.col(j).array() - t_mean[j]).square().mean());
      t_scale[j] = sd > 1e-12 ? sd : 1.0;
      Ts.col(j) = (T.col(j).array() - t_mean[j]) / t_scale[j];
    }
  }

  // layer sizes
  std::vector<Eigen::Index> sizes{d};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(out);
  const std::size_t L = sizes.size() - 1;

  CounterRng root(cfg.seed);
  CounterRng init = root.child("init");
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Index fan_in = sizes[l], fan_out = sizes[l + 1];
    // output layer starts near zero: the initial fit is the constant
    // predictor (the target mean in standardized units), and structure is
    // added only as the data demands it
    const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)) *
                       (l + 1 == L ? 0.01 : 1.0);
    Eigen::MatrixXd W(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) W(r, c) = lim * (2.0 * init.uniform() - 1.0);
    model.weights.push_back(std::move(W));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  // deterministic validation split
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  CounterRng shuf = root.child("split");
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(shuf.uniform() * static_cast<double>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  const Eigen::Index n_val =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(cfg.val_fraction *
                                                                     static_cast<double>(n))),
                               1, n - 1);
  const Eigen::Index n_tr = n - n_val;
  Eigen::MatrixXd Xtr(n_tr, d), Xva(n_val, d), Ttr(n_tr, out), Tva(n_val, out);
  for (Eigen::Index i = 0; i < n_val; ++i) {
    Xva.row(i) = Xs.row(idx[static_cast<std::size_t>(i)]);
    Tva.row(i) = Ts.row(idx[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < n_tr; ++i) {
    Xtr.row(i) = Xs.row(idx[static_cast<std::size_t>(n_val + i)]);
    Ttr.row(i) = Ts.row(idx[static_cast<std::size_t>(n_val + i)]);
  }

  // All epoch-loop buffers are allocated once up front; the loop itself is
  // GEMMs and elementwise expressions into fixed storage.
  const std::size_t Lh = L - 1;  // hidden layer count
  std::vector<Eigen::MatrixXd> pres_tr(Lh), hid_tr(Lh), hid_va(Lh), G(L), dW(L);
  std::vector<Eigen::VectorXd> db(L);
  for (std::size_t l = 0; l < Lh; ++l) {
    pres_tr[l].resize(n_tr, sizes[l + 1]);
    hid_tr[l].resize(n_tr, sizes[l + 1]);
    hid_va[l].resize(n_val, sizes[l + 1]);
  }
  for (std::size_t l = 0; l < L; ++l) {
    G[l].resize(n_tr, sizes[l + 1]);
    dW[l].resize(sizes[l + 1], sizes[l]);
    db[l].resize(sizes[l + 1]);
  }
  Eigen::MatrixXd P_tr(n_tr, out), P_va(n_val, out);

  auto forward_tr = [&]() {
    const Eigen::MatrixXd* H = &Xtr;
    for (std::size_t l = 0; l < Lh; ++l) {
      pres_tr[l].noalias() = (*H) * model.weights[l].transpose();
      pres_tr[l].rowwise() += model.biases[l].transpose();
      hid_tr[l].array() = pres_tr[l].array() / (1.0 + (-pres_tr[l].array()).exp());
      H = &hid_tr[l];
    }
    P_tr.noalias() = (*H) * model.weights[Lh].transpose();
    P_tr.rowwise() += model.biases[Lh].transpose();
  };
  auto forward_va = [&]() {
    const Eigen::MatrixXd* H = &Xva;
    for (std::size_t l = 0; l < Lh; ++l) {
      hid_va[l].noalias() = (*H) * model.weights[l].transpose();
      hid_va[l].rowwise() += model.biases[l].transpose();
      hid_va[l].array() = hid_va[l].array() / (1.0 + (-hid_va[l].array()).exp());
      H = &hid_va[l];
    }
    P_va.noalias() = (*H) * model.weights[Lh].transpose();
    P_va.rowwise() += model.biases[Lh].transpose();
  };
  auto loss_of = [&](const Eigen::MatrixXd& P, const Eigen::MatrixXd& Tgt) -> double {
    if (loss == LossKind::squared) return (P - Tgt).array().square().mean();
    // numerically stable mean binary cross-entropy; targets in {0,1}
    const auto a = P.array();
    return (a.cwiseMax(0.0) - a * Tgt.array() + (1.0 + (-a.abs()).exp()).log()).mean();
  };

  AdamState ad;
  for (std::size_t l = 0; l < L; ++l) {
    ad.mW.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    ad.vW.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    ad.mb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    ad.vb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_W = model.weights;
  std::vector<Eigen::VectorXd> best_b = model.biases;
  int bad = 0, epoch = 0;

  for (; epoch < cfg.max_epochs; ++epoch) {
    forward_tr();
    const double tr_loss = loss_of(P_tr, Ttr);
    if (!std::isfinite(tr_loss))
      throw TrainingDivergedError(std::string(who) + ": non-finite training loss at epoch " +
                                  std::to_string(epoch));

    // gradient of the mean loss with respect to the network output
    if (loss == LossKind::squared) {
      G[L - 1] = 2.0 * (P_tr - Ttr) / static_cast<double>(P_tr.size());
    } else {
      G[L - 1].array() =
          (1.0 / (1.0 + (-P_tr.array()).exp()) - Ttr.array()) / static_cast<double>(P_tr.size());
    }

    ++ad.t;
    const double corr = std::sqrt(1.0 - std::pow(b2, ad.t)) / (1.0 - std::pow(b1, ad.t));
    for (std::size_t l = L; l-- > 0;) {
      dW[l].noalias() = G[l].transpose() * (l == 0 ? Xtr : hid_tr[l - 1]);
      db[l] = G[l].colwise().sum().transpose();
      if (l > 0) {
        G[l - 1].noalias() = G[l] * model.weights[l];
        const auto s = 1.0 / (1.0 + (-pres_tr[l - 1].array()).exp());
        G[l - 1].array() *= s * (1.0 + pres_tr[l - 1].array() * (1.0 - s));
      }
      ad.mW[l] = b1 * ad.mW[l] + (1.0 - b1) * dW[l];
      ad.vW[l] = b2 * ad.vW[l] + (1.0 - b2) * dW[l].array().square().matrix();
      ad.mb[l] = b1 * ad.mb[l] + (1.0 - b1) * db[l];
      ad.vb[l] = b2 * ad.vb[l] + (1.0 - b2) * db[l].array().square().matrix();
      model.weights[l].array() -= cfg.learning_rate * corr * ad.mW[l].array() /
                                  (ad.vW[l].array().sqrt() + adam_eps);
      if (cfg.weight_decay > 0.0)
        model.weights[l] *= (1.0 - cfg.learning_rate * cfg.weight_decay);
      model.biases[l].array() -= cfg.learning_rate * corr * ad.mb[l].array() /
                                 (ad.vb[l].array().sqrt() + adam_eps);
    }

    forward_va();
    const double va_loss = loss_of(P_va, Tva);
    if (!std::isfinite(va_loss))
      throw TrainingDivergedError(std::string(who) + ": non-finite validation loss at epoch " +
                                  std::to_string(epoch));
    if (va_loss < best_val - 1e-12) {
      best_val = va_loss;
      best_W = model.weights;
      best_b = model.biases;
      bad = 0;
    } else if (++bad >= cfg.patience) {
      ++epoch;
      break;
    }
  }
  model.weights = std::move(best_W);
  model.biases = std::move(best_b);
  model.epochs_run = epoch;
  model.validation_loss = best_val;

  if (loss == LossKind::squared) {
    // fold target standardization into the affine output layer
    model.weights.back() = t_scale.asDiagonal() * model.weights.back();
    model.biases.back() = t_scale.asDiagonal() * model.biases.back() + t_mean;
  }
  return model;
}

}  // namespace detail

// mean-squared-error regressor with early stopping on a validation split
using RegressorModel = MlpModel;

inline RegressorModel fit_regression(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& targets,
                                     const LearnerConfig& cfg) {
  return detail::fit_mlp(features, targets, cfg, detail::LossKind::squared, 20,
                         "fit_regression");
}

// Density-score model: estimates d/dx log f(x | z) by denoising. The treatment
// is perturbed at two noise scales; the network sees (x_noisy, z, scale) and
// regresses the rescaled denoising direction. Evaluation divides the fit at
// the smallest scale by that scale.
struct ScoreModel {
  MlpModel net;            // inputs: (x, z..., noise_scale)
  double eval_scale = 0.0; // smallest training noise scale

  double score(double x, const Eigen::VectorXd& z) const {
    Eigen::VectorXd f(net.in_dim());
    f[0] = x;
    f.segment(1, z.size()) = z;
    f[f.size() - 1] = eval_scale;
    return net.predict_one(f)[0] / eval_scale;
  }
  double score(double x) const { return score(x, Eigen::VectorXd(0)); }

  // batch evaluation: one score per row of z, paired with x[i]
  Eigen::VectorXd score_batch(const Eigen::VectorXd& x, const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd F(x.size(), net.in_dim());
    F.col(0) = x;
    if (z.cols() > 0) F.middleCols(1, z.cols()) = z;
    F.col(F.cols() - 1).setConstant(eval_scale);
    return net.predict(F).col(0) / eval_scale;
  }
};

inline ScoreModel fit_conditional_score(const Eigen::VectorXd& x, const Eigen::MatrixXd& z,
                                        const LearnerConfig& cfg) {
  const Eigen::Index n = x.size(), kz = z.cols();
  if (n < 50) throw ParameterError("fit_conditional_score: needs at least 50 rows");
  if (z.rows() != n && kz > 0)
    throw ParameterError("fit_conditional_score: x/z row mismatch");
  if (!x.allFinite() || (kz > 0 && !z.allFinite()))
    throw ParameterError("fit_conditional_score: non-finite inputs");
  const double mu = x.mean();
  const double sd = std::sqrt((x.array() - mu).square().mean());
  if (!(sd > 0.0)) throw ParameterError("fit_conditional_score: x is constant");
  if (cfg.dsm_replicates < 1)
    throw ParameterError("fit_conditional_score: dsm_replicates must be >= 1");

  const std::vector<double> scales{0.1 * sd, 0.3 * sd};
  const auto S = static_cast<Eigen::Index>(scales.size());
  // antithetic pairs: each draw contributes (x + s e, -e) and (x - s e, +e),
  // so the denoising targets average to zero exactly within every scale slice
  // and the first-order noise cancels from the training gradient
  const Eigen::Index rows = 2 * n * S * cfg.dsm_replicates;
  Eigen::MatrixXd F(rows, 1 + kz + 1);
  Eigen::VectorXd T(rows);
  const CounterRng noise = CounterRng(cfg.seed).child("dsm");
  Eigen::Index r = 0;
  for (int rep = 0; rep < cfg.dsm_replicates; ++rep)
    for (Eigen::Index si = 0; si < S; ++si)
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto ctr = static_cast<std::uint64_t>((rep * S + si) * n + i);
        const double e = noise.normal_at(ctr);
        const double s = scales[static_cast<std::size_t>(si)];
        for (const double sign : {1.0, -1.0}) {
          F(r, 0) = x[i] + sign * s * e;
          if (kz > 0) F.block(r, 1, 1, kz) = z.row(i);
          F(r, 1 + kz) = s;
          T[r] = -sign * e;  // (x - x_noisy)/scale
          ++r;
        }
      }
  ScoreModel m;
  m.net = detail::fit_mlp(F, T, cfg, detail::LossKind::squared, 50, "fit_conditional_score");
  m.eval_scale = scales.front();
  return m;
}

inline ScoreModel fit_marginal_score(const Eigen::VectorXd& x, const LearnerConfig& cfg) {
  return fit_conditional_score(x, Eigen::MatrixXd(x.size(), 0), cfg);
}

// Density-ratio model for product-vs-joint weights: a classifier separates
// real pairs (x, v) from pairs with v permuted; the ratio of the two
// densities is exp(-log_odds), clipped to a fixed positive band.
struct RatioModel {
  MlpModel net;  // classifier logit; inputs (x..., v); class 1 = joint
  double clip_lo = 1e-3, clip_hi = 1e3;

  double log_odds(const Eigen::VectorXd& x, double v) const {
    Eigen::VectorXd f(net.in_dim());
    f.head(x.size()) = x;
    f[f.size() - 1] = v;
    return net.predict_one(f)[0];
  }
  // product density over joint density at (x, v)
  double ratio(const Eigen::VectorXd& x, double v) const {
    return std::clamp(std::exp(-log_odds(x, v)), clip_lo, clip_hi);
  }
  bool clipped(const Eigen::VectorXd& x, double v) const {
    const double r = std::exp(-log_odds(x, v));
    return r < clip_lo || r > clip_hi;
  }
};

inline RatioModel fit_density_ratio(const Eigen::VectorXd& v, const Eigen::MatrixXd& x,
                                    const LearnerConfig& cfg) {
  const Eigen::Index n = v.size(), dx = x.cols();
  if (n < 50) throw ParameterError("fit_density_ratio: needs at least 50 rows");
  if (x.rows() != n) throw ParameterError("fit_density_ratio: x/v row mismatch");
  if (!v.allFinite() || !x.allFinite())
    throw ParameterError("fit_density_ratio: non-finite inputs");
  const double sd = std::sqrt((v.array() - v.mean()).square().mean());
  if (!(sd > 0.0))
    throw ParameterError("fit_density_ratio: degenerate classes, v is constant");

  // permuted copy of v supplies the product-distribution class
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  CounterRng shuf = CounterRng(cfg.seed).child("permute");
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(shuf.uniform() * static_cast<double>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd F(2 * n, dx + 1);
  Eigen::VectorXd T(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    F.block(i, 0, 1, dx) = x.row(i);
    F(i, dx) = v[i];
    T[i] = 1.0;
    F.block(n + i, 0, 1, dx) = x.row(i);
    F(n + i, dx) = v[perm[static_cast<std::size_t>(i)]];
    T[n + i] = 0.0;
  }
  RatioModel m;
  m.net = detail::fit_mlp(F, T, cfg, detail::LossKind::logistic, 50, "fit_density_ratio");
  return m;
}

// ---------------------------------------------------------------------------
// serialization: versioned JSON with flat row-major weight arrays

inline Json to_json(const MlpModel& m) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    std::vector<double> w(static_cast<std::size_t>(m.weights[l].size()));
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c)
        w[static_cast<std::size_t>(r * m.weights[l].cols() + c)] = m.weights[l](r, c);
    layers.push_back(Json{{"rows", m.weights[l].rows()},
                          {"cols", m.weights[l].cols()},
                          {"weights", w},
                          {"bias", std::vector<double>(m.biases[l].data(),
                                                       m.biases[l].data() + m.biases[l].size())}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"activation", m.activation},
              {"target_transform", m.target_transform},
              {"input_mean", std::vector<double>(m.input_mean.data(),
                                                 m.input_mean.data() + m.input_mean.size())},
              {"input_scale", std::vector<double>(m.input_scale.data(),
                                                  m.input_scale.data() + m.input_scale.size())},
              {"layers", layers},
              {"validation_loss", m.validation_loss},
              {"epochs_run", m.epochs_run}};
}

inline MlpModel mlp_from_json(const Json& j) {
  check_keys(j, {"schema_version", "activation", "target_transform", "input_mean", "input_scale",
                 "layers", "validation_loss", "epochs_run"},
             "mlp model");
  if (require_field(j, "schema_version", "mlp model").get<int>() != kSchemaVersion)
    throw ParameterError("mlp model: unsupported schema_version");
  MlpModel m;
  m.activation = require_field(j, "activation", "mlp model").get<std::string>();
  if (m.activation != "silu") throw ParameterError("mlp model: unknown activation tag");
  m.target_transform = require_field(j, "target_transform", "mlp model").get<std::string>();
  if (m.target_transform != "identity")
    throw ParameterError("mlp model: unknown target transform tag");
  const auto mean = require_field(j, "input_mean", "mlp model").get<std::vector<double>>();
  const auto scale = require_field(j, "input_scale", "mlp model").get<std::vector<double>>();
  m.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                   static_cast<Eigen::Index>(mean.size()));
  m.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(),
                                                    static_cast<Eigen::Index>(scale.size()));
  for (const Json& lj : require_field(j, "layers", "mlp model")) {
    check_keys(lj, {"rows", "cols", "weights", "bias"}, "mlp layer");
    const auto rows = require_field(lj, "rows", "mlp layer").get<Eigen::Index>();
    const auto cols = require_field(lj, "cols", "mlp layer").get<Eigen::Index>();
    const auto w = require_field(lj, "weights", "mlp layer").get<std::vector<double>>();
    const auto b = require_field(lj, "bias", "mlp layer").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
      throw ParameterError("mlp layer: shape header does not match array lengths");
    Eigen::MatrixXd W(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    m.weights.push_back(std::move(W));
    m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
  }
  if (m.weights.empty()) throw ParameterError("mlp model: no layers");
  m.validation_loss = require_field(j, "validation_loss", "mlp model").get<double>();
  m.epochs_run = require_field(j, "epochs_run", "mlp model").get<int>();
  return m;
}

inline Json to_json(const ScoreModel& m) {
  return Json{{"schema_version", kSchemaVersion},
              {"net", to_json(m.net)},
              {"eval_scale", m.eval_scale}};
}
inline ScoreModel score_model_from_json(const Json& j) {
  check_keys(j, {"schema_version", "net", "eval_scale"}, "score model");
  ScoreModel m;
  m.net = mlp_from_json(require_field(j, "net", "score model"));
  m.eval_scale = require_field(j, "eval_scale", "score model").get<double>();
  if (!(m.eval_scale > 0.0)) throw ParameterError("score model: eval_scale must be positive");
  return m;
}

inline Json to_json(const RatioModel& m) {
  return Json{{"schema_version", kSchemaVersion},
              {"net", to_json(m.net)},
              {"clip_lo", m.clip_lo},
              {"clip_hi", m.clip_hi}};
}
inline RatioModel ratio_model_from_json(const Json& j) {
  check_keys(j, {"schema_version", "net", "clip_lo", "clip_hi"}, "ratio model");
  RatioModel m;
  m.net = mlp_from_json(require_field(j, "net", "ratio model"));
  m.clip_lo = require_field(j, "clip_lo", "ratio model").get<double>();
  m.clip_hi = require_field(j, "clip_hi", "ratio model").get<double>();
  if (!(m.clip_lo > 0.0 && m.clip_hi > m.clip_lo))
    throw ParameterError("ratio model: clip bounds must satisfy 0 < lo < hi");
  return m;
}

}  // namespace elast::learn
