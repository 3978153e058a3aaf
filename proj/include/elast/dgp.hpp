#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "elast/dataset.hpp"
#include "elast/jsonio.hpp"
#include "elast/rng.hpp"

// Data generating processes for log-scale outcome models
//   log Y = a(w) + eps(w) * t(X) + noise,   t(X) = log X or X,
// plus exact simulation oracles for the population quantities the estimators
// target. Oracles are Monte Carlo with counter-based draws: same seed, same
// draw count -> bit-identical results, independent of how work is partitioned.
namespace elast::dgp {

enum class Convention { elasticity, semi_elasticity };

struct DegenerateCoef {
  double a = 0.0, eps = 0.0;
};
struct GaussianIndepCoef {
  double a = 0.0;        // level constant across the population
  double eps_mean = 0.0;
  double eps_var = 0.0;
};
struct BivariateGaussianCoef {
  double a_mean = 0.0, eps_mean = 0.0;
  double a_var = 1.0, cov = 0.0, eps_var = 1.0;
};
struct TwoPointCoef {
  double a1 = 0.0, eps1 = 0.0, p1 = 0.5;
  double a2 = 0.0, eps2 = 0.0;
};
using CoefLaw = std::variant<DegenerateCoef, GaussianIndepCoef, BivariateGaussianCoef, TwoPointCoef>;

struct LogUniformX {
  double lo = 1.0, hi = 2.0;  // levels; log X ~ U[log lo, log hi]
};
struct BernoulliX {
  double p = 0.5;
};
struct FixedX {
  double value = 1.0;
};
using RegressorLaw = std::variant<LogUniformX, BernoulliX, FixedX>;

// optional mean-zero Gaussian noise on the log scale; sd == 0 disables it
struct NoiseLaw {
  double sd = 0.0;
};

struct PopulationSpec {
  CoefLaw coef_law;
  RegressorLaw regressor_law;
  NoiseLaw noise;
  Convention convention = Convention::elasticity;
};

// triangular system, semi-elasticity convention throughout:
//   Z ~ N(z_mean, z_sd^2),  X = g0_intercept + g0_slope Z + V,  V ~ N(0, v_sd^2),
//   (a, eps) | V independent Gaussians with means affine in V, fixed variances,
//   log Y = a + eps X.
struct TriangularIVSpec {
  double z_mean = 0.0, z_sd = 1.0;
  double g0_intercept = 0.0, g0_slope = 1.0;
  double v_sd = 1.0;
  double a_intercept = 0.0, a_slope = 0.0, a_sd = 1.0;
  double eps_intercept = 0.0, eps_slope = 0.0, eps_sd = 0.0;
};

struct McValue {
  double value = 0.0;
  double mc_se = 0.0;
};

namespace detail {

inline void draw_coef(const CoefLaw& law, const CounterRng& s1, const CounterRng& s2,
                      std::uint64_t i, double& a, double& e) {
  if (const auto* d = std::get_if<DegenerateCoef>(&law)) {
    a = d->a;
    e = d->eps;
  } else if (const auto* g = std::get_if<GaussianIndepCoef>(&law)) {
    a = g->a;
    e = g->eps_mean + std::sqrt(g->eps_var) * s1.normal_at(i);
  } else if (const auto* b = std::get_if<BivariateGaussianCoef>(&law)) {
    // manual 2x2 Cholesky; degenerate variances allowed
    const double l11 = std::sqrt(std::max(0.0, b->a_var));
    const double l21 = l11 > 0.0 ? b->cov / l11 : 0.0;
    const double l22 = std::sqrt(std::max(0.0, b->eps_var - l21 * l21));
    const double n1 = s1.normal_at(i), n2 = s2.normal_at(i);
    a = b->a_mean + l11 * n1;
    e = b->eps_mean + l21 * n1 + l22 * n2;
  } else {
    const auto& t = std::get<TwoPointCoef>(law);
    if (s1.uniform_at(i) < t.p1) {
      a = t.a1;
      e = t.eps1;
    } else {
      a = t.a2;
      e = t.eps2;
    }
  }
}

inline double coef_law_eps_mean(const CoefLaw& law) {
  if (const auto* d = std::get_if<DegenerateCoef>(&law)) return d->eps;
  if (const auto* g = std::get_if<GaussianIndepCoef>(&law)) return g->eps_mean;
  if (const auto* b = std::get_if<BivariateGaussianCoef>(&law)) return b->eps_mean;
  const auto& t = std::get<TwoPointCoef>(law);
  return t.p1 * t.eps1 + (1.0 - t.p1) * t.eps2;
}

// treatment value as it enters the linear index (log level under elasticity)
inline double draw_treatment(const RegressorLaw& law, Convention conv, const CounterRng& s,
                             std::uint64_t i) {
  if (const auto* lu = std::get_if<LogUniformX>(&law)) {
    if (!(lu->lo > 0.0 && lu->hi > lu->lo)) throw ParameterError("log_uniform: need 0 < lo < hi");
    const double lx = std::log(lu->lo) + (std::log(lu->hi) - std::log(lu->lo)) * s.uniform_at(i);
    return conv == Convention::elasticity ? lx : std::exp(lx);
  }
  if (const auto* b = std::get_if<BernoulliX>(&law)) {
    if (!(b->p >= 0.0 && b->p <= 1.0)) throw ParameterError("bernoulli: p outside [0,1]");
    return s.uniform_at(i) < b->p ? 1.0 : 0.0;
  }
  const auto& f = std::get<FixedX>(law);
  if (conv == Convention::elasticity) {
    if (!(f.value > 0.0)) throw ParameterError("fixed regressor: level must be > 0 under elasticity");
    return std::log(f.value);
  }
  return f.value;
}

// ratio estimator sum_i w_i e_i / sum_i w_i with log-weights, fixed pairwise
// reduction, delta-method MC standard error, and a dominance guard: if the top
// draw carries more than half the total weight the population moment is
// treated as numerically non-finite.
template <class LogWeightFn, class ValueFn>
McValue tilted_ratio(std::uint64_t draws, LogWeightFn&& lw_fn, ValueFn&& e_fn) {
  if (draws < 2) throw ParameterError("mc oracle: need at least 2 draws");
  constexpr std::uint64_t kChunk = 4096;
  double lw_max = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < draws; ++i) lw_max = std::max(lw_max, lw_fn(i));
  if (!std::isfinite(lw_max)) throw NonFiniteMomentError("mc oracle: non-finite log weight");

  const std::uint64_t n_chunks = (draws + kChunk - 1) / kChunk;
  std::vector<double> sum_w(n_chunks), sum_we(n_chunks);
  std::vector<double> buf_w(kChunk), buf_we(kChunk);
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    const std::uint64_t lo = c * kChunk, hi = std::min(draws, lo + kChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double w = std::exp(lw_fn(i) - lw_max);
      buf_w[i - lo] = w;
      buf_we[i - lo] = w * e_fn(i);
    }
    sum_w[c] = pairwise_sum(buf_w.data(), 0, hi - lo);
    sum_we[c] = pairwise_sum(buf_we.data(), 0, hi - lo);
  }
  const double W = pairwise_sum(sum_w);
  // max weight is exp(0) = 1 after the shift, so its share is 1/W
  if (W < 2.0)
    throw NonFiniteMomentError(
        "mc oracle: one draw carries more than half the total weight; the "
        "population moment looks non-finite at this parameter point");
  const double R = pairwise_sum(sum_we) / W;

  std::vector<double> sum_if2(n_chunks);
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    const std::uint64_t lo = c * kChunk, hi = std::min(draws, lo + kChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double w = std::exp(lw_fn(i) - lw_max);
      const double f = w * (e_fn(i) - R);
      buf_w[i - lo] = f * f;
    }
    sum_if2[c] = pairwise_sum(buf_w.data(), 0, hi - lo);
  }
  const double nd = static_cast<double>(draws);
  const double w_bar = W / nd;
  const double se = std::sqrt(pairwise_sum(sum_if2) / nd) / w_bar / std::sqrt(nd);
  return {R, se};
}

}  // namespace detail

inline Dataset simulate_cross_section(const PopulationSpec& spec, Eigen::Index n,
                                      std::uint64_t seed) {
  if (n < 1) throw ParameterError("simulate_cross_section: n must be >= 1");
  CounterRng root(seed);
  const CounterRng sx = root.child("x");
  const CounterRng sc1 = root.child("coef.1");
  const CounterRng sc2 = root.child("coef.2");
  const CounterRng sn = root.child("noise");
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.controls.resize(n, 0);
  d.instruments.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double t = detail::draw_treatment(spec.regressor_law, spec.convention, sx, u);
    double a, e;
    detail::draw_coef(spec.coef_law, sc1, sc2, u, a, e);
    double logy = a + e * t;
    if (spec.noise.sd > 0.0) logy += spec.noise.sd * sn.normal_at(u);
    d.x[i] = t;
    d.y[i] = std::exp(logy);
  }
  d.validate();
  return d;
}

inline Dataset simulate_triangular_iv(const TriangularIVSpec& spec, Eigen::Index n,
                                      std::uint64_t seed) {
  if (n < 1) throw ParameterError("simulate_triangular_iv: n must be >= 1");
  if (!(spec.v_sd > 0.0)) throw ParameterError("simulate_triangular_iv: v_sd must be > 0");
  CounterRng root(seed);
  const CounterRng sz = root.child("z");
  const CounterRng sv = root.child("v");
  const CounterRng sa = root.child("a");
  const CounterRng se = root.child("eps");
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.controls.resize(n, 0);
  d.instruments.resize(n, 1);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double z = spec.z_mean + spec.z_sd * sz.normal_at(u);
    const double vi = spec.v_sd * sv.normal_at(u);
    const double x = spec.g0_intercept + spec.g0_slope * z + vi;
    const double a = spec.a_intercept + spec.a_slope * vi + spec.a_sd * sa.normal_at(u);
    const double e = spec.eps_intercept + spec.eps_slope * vi + spec.eps_sd * se.normal_at(u);
    d.instruments(i, 0) = z;
    v[i] = vi;
    d.x[i] = x;
    d.y[i] = std::exp(a + e * x);
  }
  d.v_true = std::move(v);
  d.validate();
  return d;
}

enum class PowerMeanTag { geometric, min, max };

// M_phi(v) = (mean v^phi)^(1/phi), computed through logs so large |phi| does
// not overflow; phi = 0 is the geometric mean, +-inf the max/min
inline double power_mean(std::span<const double> values, double phi) {
  if (values.empty()) throw ParameterError("power_mean: empty input");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("power_mean: values must be finite and > 0");
  if (std::isinf(phi))
    return phi > 0 ? *std::max_element(values.begin(), values.end())
                   : *std::min_element(values.begin(), values.end());
  std::vector<double> l(values.size());
  if (phi == 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) l[i] = std::log(values[i]);
    return std::exp(pairwise_sum(l) / static_cast<double>(values.size()));
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    l[i] = phi * std::log(values[i]);
    m = std::max(m, l[i]);
  }
  for (double& li : l) li = std::exp(li - m);
  const double lse = std::log(pairwise_sum(l)) + m;
  return std::exp((lse - std::log(static_cast<double>(values.size()))) / phi);
}
inline double power_mean(std::span<const double> values, PowerMeanTag tag) {
  switch (tag) {
    case PowerMeanTag::geometric: return power_mean(values, 0.0);
    case PowerMeanTag::min: return power_mean(values, -std::numeric_limits<double>::infinity());
    default: return power_mean(values, std::numeric_limits<double>::infinity());
  }
}

// representer eps_phi(x) = E[Y(x)^phi eps] / E[Y(x)^phi] by simple MC
inline McValue power_mean_elasticity_mc(const PopulationSpec& spec, double phi, double x,
                                        std::uint64_t draws, std::uint64_t seed) {
  double t;
  if (spec.convention == Convention::elasticity) {
    if (!(x > 0.0)) throw ParameterError("power_mean_elasticity_mc: x must be > 0 under elasticity");
    t = std::log(x);
  } else {
    t = x;
  }
  CounterRng root(seed);
  const CounterRng sc1 = root.child("coef.1");
  const CounterRng sc2 = root.child("coef.2");
  const CounterRng sn = root.child("noise");
  const double nsd = spec.noise.sd;
  auto lw = [&](std::uint64_t i) {
    double a, e;
    detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
    double lv = a + e * t;
    if (nsd > 0.0) lv += nsd * sn.normal_at(i);
    return phi * lv;
  };
  auto ev = [&](std::uint64_t i) {
    double a, e;
    detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
    return e;
  };
  return detail::tilted_ratio(draws, lw, ev);
}

// Gaussian closed form: eps independent N(eps_mean, eps_var), a constant.
// The level constant cancels from the ratio, hence the unused argument.
inline double gaussian_closed_form_elasticity(double /*a*/, double eps_mean, double eps_var,
                                              double phi, double x) {
  if (!(x > 0.0)) throw ParameterError("gaussian_closed_form_elasticity: x must be > 0");
  if (!(eps_var >= 0.0)) throw ParameterError("gaussian_closed_form_elasticity: eps_var < 0");
  return eps_mean + phi * eps_var * std::log(x);
}

// arithmetic-vs-geometric gap at a point: E[e^a x^de de] / E[e^a x^de] with
// de = eps - E[eps]; equals eps_1(x) - eps_0
inline McValue wedge(const PopulationSpec& spec, double x, std::uint64_t draws,
                     std::uint64_t seed) {
  double t;
  if (spec.convention == Convention::elasticity) {
    if (!(x > 0.0)) throw ParameterError("wedge: x must be > 0 under elasticity");
    t = std::log(x);
  } else {
    t = x;
  }
  const double e_bar = detail::coef_law_eps_mean(spec.coef_law);
  CounterRng root(seed);
  const CounterRng sc1 = root.child("coef.1");
  const CounterRng sc2 = root.child("coef.2");
  const CounterRng sn = root.child("noise");
  const double nsd = spec.noise.sd;
  auto lw = [&](std::uint64_t i) {
    double a, e;
    detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
    double lv = a + (e - e_bar) * t;
    if (nsd > 0.0) lv += nsd * sn.normal_at(i);
    return lv;
  };
  auto ev = [&](std::uint64_t i) {
    double a, e;
    detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
    return e - e_bar;
  };
  return detail::tilted_ratio(draws, lw, ev);
}

// population average of the pointwise arithmetic-mean (semi-)elasticity,
// nested MC: outer draws of the regressor, inner representer ratio at each
inline McValue true_average_arithmetic_elasticity(const PopulationSpec& spec, std::uint64_t draws,
                                                  std::uint64_t seed) {
  const auto outer = static_cast<std::uint64_t>(
      std::max(64.0, std::floor(std::sqrt(static_cast<double>(draws)))));
  const std::uint64_t inner = std::max<std::uint64_t>(64, draws / outer);
  CounterRng root(seed);
  const CounterRng sx = root.child("x");
  const double nsd = spec.noise.sd;
  std::vector<double> vals(outer);
  for (std::uint64_t o = 0; o < outer; ++o) {
    const double t = detail::draw_treatment(spec.regressor_law, spec.convention, sx, o);
    CounterRng in = root.child("inner", o);
    const CounterRng sc1 = in.child("coef.1");
    const CounterRng sc2 = in.child("coef.2");
    const CounterRng sn = in.child("noise");
    auto lw = [&](std::uint64_t i) {
      double a, e;
      detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
      double lv = a + e * t;
      if (nsd > 0.0) lv += nsd * sn.normal_at(i);
      return lv;
    };
    auto ev = [&](std::uint64_t i) {
      double a, e;
      detail::draw_coef(spec.coef_law, sc1, sc2, i, a, e);
      return e;
    };
    vals[o] = detail::tilted_ratio(inner, lw, ev).value;
  }
  const double nd = static_cast<double>(outer);
  const double mean = pairwise_sum(vals) / nd;
  for (double& v : vals) v = (v - mean) * (v - mean);
  const double se = std::sqrt(pairwise_sum(vals) / nd / nd);
  return {mean, se};
}

// IV analogue: theta(x) = d/dx log E[Y(x)] with (a, eps) drawn from their
// marginal law (V integrated out); the derivative is the exact representer
// E[eps e^{a + eps x}] / E[e^{a + eps x}], no numeric differentiation
inline McValue true_average_arithmetic_elasticity(const TriangularIVSpec& spec,
                                                  std::uint64_t draws, std::uint64_t seed) {
  const auto outer = static_cast<std::uint64_t>(
      std::max(64.0, std::floor(std::sqrt(static_cast<double>(draws)))));
  const std::uint64_t inner = std::max<std::uint64_t>(64, draws / outer);
  CounterRng root(seed);
  const CounterRng sz = root.child("z");
  const CounterRng sv = root.child("v");
  std::vector<double> vals(outer);
  for (std::uint64_t o = 0; o < outer; ++o) {
    const double z = spec.z_mean + spec.z_sd * sz.normal_at(o);
    const double x = spec.g0_intercept + spec.g0_slope * z + spec.v_sd * sv.normal_at(o);
    CounterRng in = root.child("inner", o);
    const CounterRng iv = in.child("v");
    const CounterRng ia = in.child("a");
    const CounterRng ie = in.child("eps");
    auto draw_ae = [&](std::uint64_t i, double& a, double& e) {
      const double v = spec.v_sd * iv.normal_at(i);
      a = spec.a_intercept + spec.a_slope * v + spec.a_sd * ia.normal_at(i);
      e = spec.eps_intercept + spec.eps_slope * v + spec.eps_sd * ie.normal_at(i);
    };
    auto lw = [&](std::uint64_t i) {
      double a, e;
      draw_ae(i, a, e);
      return a + e * x;
    };
    auto ev = [&](std::uint64_t i) {
      double a, e;
      draw_ae(i, a, e);
      return e;
    };
    vals[o] = detail::tilted_ratio(inner, lw, ev).value;
  }
  const double nd = static_cast<double>(outer);
  const double mean = pairwise_sum(vals) / nd;
  for (double& v : vals) v = (v - mean) * (v - mean);
  const double se = std::sqrt(pairwise_sum(vals) / nd / nd);
  return {mean, se};
}

struct Prop3Twins {
  Dataset model_a;  // homogeneous slope, level variance depends on treatment arm
  Dataset model_b;  // heterogeneous slope independent of treatment
  std::function<double(double)> theta_a;
  std::function<double(double)> theta_b;
};

// Two observationally equivalent binary designs: log Y | X=1 is N(beta0, 1+sigma2)
// under both, yet the average arithmetic semi-elasticities differ by sigma2 at
// x = 1. Randomized assignment doubles as its own instrument (iv1 column).
inline Prop3Twins prop3_twin_dgps(double beta0, double sigma2, Eigen::Index n,
                                  std::uint64_t seed) {
  if (n < 2) throw ParameterError("prop3_twin_dgps: n must be >= 2");
  if (!(sigma2 >= 0.0)) throw ParameterError("prop3_twin_dgps: sigma2 must be >= 0");
  CounterRng root(seed);
  const CounterRng sx = root.child("x");
  const CounterRng sa = root.child("a");
  const CounterRng se = root.child("eps");
  auto blank = [&] {
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 1);
    return d;
  };
  Dataset da = blank(), db = blank();
  const double sd1 = std::sqrt(1.0 + sigma2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double x = sx.uniform_at(u) < 0.5 ? 1.0 : 0.0;
    const double na = sa.normal_at(u), ne = se.normal_at(u);
    da.x[i] = db.x[i] = x;
    da.instruments(i, 0) = db.instruments(i, 0) = x;
    // A: eps == beta0, level noise variance 1 + sigma2 in the treated arm
    da.y[i] = std::exp((x == 1.0 ? sd1 * na : na) + beta0 * x);
    // B: level noise N(0,1), eps ~ N(beta0, sigma2) independent of X
    db.y[i] = std::exp(na + (beta0 + std::sqrt(sigma2) * ne) * x);
  }
  da.validate();
  db.validate();
  Prop3Twins out;
  out.model_a = std::move(da);
  out.model_b = std::move(db);
  out.theta_a = [beta0](double) { return beta0; };
  out.theta_b = [beta0, sigma2](double x) { return beta0 + sigma2 * x; };
  return out;
}

// marginal value of public funds for a tax elasticity:
// 1 / (1 - (tau/(1-tau)) z eps)
inline double mvpf(double tau, double z, double eps) {
  if (!(tau >= 0.0 && tau < 1.0)) throw ParameterError("mvpf: tau must lie in [0,1)");
  const double den = 1.0 - tau / (1.0 - tau) * z * eps;
  if (std::fabs(den) < 1e-12) throw ParameterError("mvpf: denominator is zero");
  return 1.0 / den;
}

// --- JSON (strict: unknown fields rejected) ---

inline Json to_json(const PopulationSpec& s) {
  Json j;
  if (const auto* d = std::get_if<DegenerateCoef>(&s.coef_law))
    j["coef_law"] = {{"type", "degenerate"}, {"a", d->a}, {"eps", d->eps}};
  else if (const auto* g = std::get_if<GaussianIndepCoef>(&s.coef_law))
    j["coef_law"] = {{"type", "gaussian_indep"}, {"a", g->a}, {"eps_mean", g->eps_mean}, {"eps_var", g->eps_var}};
  else if (const auto* b = std::get_if<BivariateGaussianCoef>(&s.coef_law))
    j["coef_law"] = {{"type", "bivariate_gaussian"}, {"a_mean", b->a_mean}, {"eps_mean", b->eps_mean},
                     {"a_var", b->a_var}, {"cov", b->cov}, {"eps_var", b->eps_var}};
  else {
    const auto& t = std::get<TwoPointCoef>(s.coef_law);
    j["coef_law"] = {{"type", "two_point"}, {"a1", t.a1}, {"eps1", t.eps1}, {"p1", t.p1},
                     {"a2", t.a2}, {"eps2", t.eps2}};
  }
  if (const auto* lu = std::get_if<LogUniformX>(&s.regressor_law))
    j["regressor_law"] = {{"type", "log_uniform"}, {"lo", lu->lo}, {"hi", lu->hi}};
  else if (const auto* b = std::get_if<BernoulliX>(&s.regressor_law))
    j["regressor_law"] = {{"type", "bernoulli"}, {"p", b->p}};
  else
    j["regressor_law"] = {{"type", "fixed"}, {"value", std::get<FixedX>(s.regressor_law).value}};
  j["noise"] = s.noise.sd > 0.0 ? Json{{"type", "gaussian"}, {"sd", s.noise.sd}} : Json{{"type", "none"}};
  j["convention"] = s.convention == Convention::elasticity ? "elasticity" : "semi_elasticity";
  return j;
}

inline PopulationSpec population_spec_from_json(const Json& j) {
  check_keys(j, {"coef_law", "regressor_law", "noise", "convention"}, "population spec");
  PopulationSpec s;
  const Json& c = require_field(j, "coef_law", "population spec");
  const std::string ct = require_field(c, "type", "coef_law").get<std::string>();
  if (ct == "degenerate") {
    check_keys(c, {"type", "a", "eps"}, "coef_law");
    s.coef_law = DegenerateCoef{require_field(c, "a", "coef_law").get<double>(),
                                require_field(c, "eps", "coef_law").get<double>()};
  } else if (ct == "gaussian_indep") {
    check_keys(c, {"type", "a", "eps_mean", "eps_var"}, "coef_law");
    s.coef_law = GaussianIndepCoef{require_field(c, "a", "coef_law").get<double>(),
                                   require_field(c, "eps_mean", "coef_law").get<double>(),
                                   require_field(c, "eps_var", "coef_law").get<double>()};
  } else if (ct == "bivariate_gaussian") {
    check_keys(c, {"type", "a_mean", "eps_mean", "a_var", "cov", "eps_var"}, "coef_law");
    s.coef_law = BivariateGaussianCoef{
        require_field(c, "a_mean", "coef_law").get<double>(),
        require_field(c, "eps_mean", "coef_law").get<double>(),
        require_field(c, "a_var", "coef_law").get<double>(),
        require_field(c, "cov", "coef_law").get<double>(),
        require_field(c, "eps_var", "coef_law").get<double>()};
  } else if (ct == "two_point") {
    check_keys(c, {"type", "a1", "eps1", "p1", "a2", "eps2"}, "coef_law");
    s.coef_law = TwoPointCoef{require_field(c, "a1", "coef_law").get<double>(),
                              require_field(c, "eps1", "coef_law").get<double>(),
                              require_field(c, "p1", "coef_law").get<double>(),
                              require_field(c, "a2", "coef_law").get<double>(),
                              require_field(c, "eps2", "coef_law").get<double>()};
  } else {
    throw ParameterError("coef_law: unknown type '" + ct + "'");
  }
  const Json& r = require_field(j, "regressor_law", "population spec");
  const std::string rt = require_field(r, "type", "regressor_law").get<std::string>();
  if (rt == "log_uniform") {
    check_keys(r, {"type", "lo", "hi"}, "regressor_law");
    s.regressor_law = LogUniformX{require_field(r, "lo", "regressor_law").get<double>(),
                                  require_field(r, "hi", "regressor_law").get<double>()};
  } else if (rt == "bernoulli") {
    check_keys(r, {"type", "p"}, "regressor_law");
    s.regressor_law = BernoulliX{require_field(r, "p", "regressor_law").get<double>()};
  } else if (rt == "fixed") {
    check_keys(r, {"type", "value"}, "regressor_law");
    s.regressor_law = FixedX{require_field(r, "value", "regressor_law").get<double>()};
  } else {
    throw ParameterError("regressor_law: unknown type '" + rt + "'");
  }
  if (j.contains("noise")) {
    const Json& nj = j["noise"];
    const std::string nt = require_field(nj, "type", "noise").get<std::string>();
    if (nt == "gaussian") {
      check_keys(nj, {"type", "sd"}, "noise");
      s.noise.sd = require_field(nj, "sd", "noise").get<double>();
      if (!(s.noise.sd >= 0.0)) throw ParameterError("noise: sd must be >= 0");
    } else if (nt == "none") {
      check_keys(nj, {"type"}, "noise");
      s.noise.sd = 0.0;
    } else {
      throw ParameterError("noise: unknown type '" + nt + "'");
    }
  }
  const std::string conv = get_or<std::string>(j, "convention", "elasticity");
  if (conv == "elasticity")
    s.convention = Convention::elasticity;
  else if (conv == "semi_elasticity")
    s.convention = Convention::semi_elasticity;
  else
    throw ParameterError("convention: must be 'elasticity' or 'semi_elasticity'");
  return s;
}

inline Json to_json(const TriangularIVSpec& s) {
  return Json{{"z", {{"mean", s.z_mean}, {"sd", s.z_sd}}},
              {"g0", {{"intercept", s.g0_intercept}, {"slope", s.g0_slope}}},
              {"v_sd", s.v_sd},
              {"coef_given_v",
               {{"a_intercept", s.a_intercept},
                {"a_slope", s.a_slope},
                {"a_sd", s.a_sd},
                {"eps_intercept", s.eps_intercept},
                {"eps_slope", s.eps_slope},
                {"eps_sd", s.eps_sd}}}};
}

inline TriangularIVSpec triangular_iv_spec_from_json(const Json& j) {
  check_keys(j, {"z", "g0", "v_sd", "coef_given_v"}, "triangular iv spec");
  TriangularIVSpec s;
  const Json& z = require_field(j, "z", "triangular iv spec");
  check_keys(z, {"mean", "sd"}, "z");
  s.z_mean = require_field(z, "mean", "z").get<double>();
  s.z_sd = require_field(z, "sd", "z").get<double>();
  const Json& g = require_field(j, "g0", "triangular iv spec");
  check_keys(g, {"intercept", "slope"}, "g0");
  s.g0_intercept = require_field(g, "intercept", "g0").get<double>();
  s.g0_slope = require_field(g, "slope", "g0").get<double>();
  s.v_sd = require_field(j, "v_sd", "triangular iv spec").get<double>();
  const Json& c = require_field(j, "coef_given_v", "triangular iv spec");
  check_keys(c, {"a_intercept", "a_slope", "a_sd", "eps_intercept", "eps_slope", "eps_sd"},
             "coef_given_v");
  s.a_intercept = require_field(c, "a_intercept", "coef_given_v").get<double>();
  s.a_slope = require_field(c, "a_slope", "coef_given_v").get<double>();
  s.a_sd = require_field(c, "a_sd", "coef_given_v").get<double>();
  s.eps_intercept = require_field(c, "eps_intercept", "coef_given_v").get<double>();
  s.eps_slope = require_field(c, "eps_slope", "coef_given_v").get<double>();
  s.eps_sd = require_field(c, "eps_sd", "coef_given_v").get<double>();
  return s;
}

}  // namespace elast::dgp
