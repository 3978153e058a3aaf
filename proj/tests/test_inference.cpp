#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "elast/baseline.hpp"
#include "elast/dgp.hpp"
#include "elast/dream.hpp"
#include "elast/inference.hpp"
#include "elast/rng.hpp"

using namespace elast;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

// minimal two-coefficient fit with a planted slope and influence column
baseline::FitResult planted_fit(double beta_x, const Eigen::VectorXd& inf_x) {
  baseline::FitResult f;
  f.names = {"intercept", "x"};
  f.coefficients = Eigen::VectorXd::Zero(2);
  f.coefficients[1] = beta_x;
  f.influence = Eigen::MatrixXd::Zero(inf_x.size(), 2);
  f.influence.col(1) = inf_x;
  f.vcov_robust = Eigen::MatrixXd::Zero(2, 2);
  f.residuals = Eigen::VectorXd::Zero(inf_x.size());
  f.estimator_tag = "planted";
  return f;
}

EstimateReport planted_report(double theta, const Eigen::VectorXd& scores) {
  EstimateReport r;
  r.method = "planted";
  r.theta_hat = theta;
  r.scores = scores;
  r.n = scores.size();
  return r;
}

inference::ComparisonResult fake_result(double a, double b, double p, bool flip) {
  inference::ComparisonResult r;
  r.estimate_a = a;
  r.estimate_b = b;
  r.difference = a - b;
  r.p_value = p;
  r.sign_flip = flip;
  return r;
}

// two log-normal arms whose log-means differ by beta0 but whose log-variances
// differ too, so the exponentiated slope and the arithmetic percentage change
// disagree in the population
Dataset selection_arms(Eigen::Index n, double beta0, double sd0, double sd1,
                       std::uint64_t seed) {
  CounterRng rng(seed);
  Dataset d;
  d.x.resize(n);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = static_cast<double>(i % 2);
    const double sd = xi == 1.0 ? sd1 : sd0;
    d.x[i] = xi;
    d.y[i] = std::exp(beta0 * xi + sd * rng.normal());
  }
  return d;
}

}  // namespace

TEST_CASE("identical estimators are reported as indistinguishable") {
  SECTION("bitwise-equal influence vectors give p = 1 deterministically") {
    CounterRng rng(31);
    Eigen::VectorXd inf(50);
    for (Eigen::Index i = 0; i < inf.size(); ++i) inf[i] = rng.normal();
    inf.array() -= inf.mean();
    const auto fit = planted_fit(0.7, inf);
    const auto rep = planted_report(0.7, inf);
    const auto res = inference::compare_continuous(fit, rep);
    CHECK(res.difference == 0.0);
    CHECK(res.z_stat == 0.0);
    CHECK(res.p_value == 1.0);
    CHECK_FALSE(res.significant());
    CHECK_FALSE(res.sign_flip);
  }

  SECTION("count model vs. two-arm means on binary data agree to rounding") {
    // on binary x the exponentiated count-model slope equals the ratio of arm
    // means, and the delta-scaled per-observation influences coincide
    // algebraically, so the comparison must report identity, not a 0/0 coin
    // flip
    CounterRng rng(77);
    Dataset d;
    const Eigen::Index n = 400;
    d.x.resize(n);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.x[i] = static_cast<double>(i % 2);
      d.y[i] = std::exp(0.2 + 0.3 * d.x[i] + 0.3 * rng.normal());
    }
    const baseline::FitResult fit = baseline::ppml(d);
    const EstimateReport rep = baseline::manning_binary(d);
    CHECK_THAT(std::exp(fit.coef("x")) - 1.0, WithinAbs(rep.theta_hat, 1e-12));

    const auto res = inference::compare_discrete(fit, rep);
    CHECK(res.convention == inference::Convention::discrete);
    CHECK(std::fabs(res.difference) < 1e-12);
    CHECK(res.se_difference < 1e-10);
    CHECK(res.z_stat == 0.0);
    CHECK(res.p_value == 1.0);
  }
}

TEST_CASE("comparison input validation") {
  CounterRng rng(5);
  Eigen::VectorXd inf(10);
  for (Eigen::Index i = 0; i < inf.size(); ++i) inf[i] = rng.normal();

  SECTION("influence vectors from different samples are rejected") {
    const auto fit = planted_fit(0.1, inf);
    const auto rep = planted_report(0.1, Eigen::VectorXd::Zero(12));
    CHECK_THROWS_WITH(inference::compare_continuous(fit, rep),
                      ContainsSubstring("lengths differ"));
  }
  SECTION("level must be a probability") {
    const auto fit = planted_fit(0.1, inf);
    const auto rep = planted_report(0.1, inf);
    CHECK_THROWS_AS(inference::compare_continuous(fit, rep, 1.0), ParameterError);
    CHECK_THROWS_AS(inference::compare_continuous(fit, rep, 0.0), ParameterError);
  }
  SECTION("a single observation cannot support a variance") {
    const auto fit = planted_fit(0.1, Eigen::VectorXd::Ones(1));
    const auto rep = planted_report(0.1, Eigen::VectorXd::Ones(1));
    CHECK_THROWS_AS(inference::compare_continuous(fit, rep), ParameterError);
  }
}

TEST_CASE("swapping the estimators negates the difference and keeps the verdict") {
  CounterRng rng(12);
  const Eigen::Index n = 300;
  Eigen::VectorXd ia(n), ib(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ia[i] = rng.normal();
    ib[i] = 0.4 * ia[i] + rng.normal();
  }
  const auto ab = inference::detail::compare_influences(0.42, ia, 0.17, ib, 0.95,
                                                        inference::Convention::continuous);
  const auto ba = inference::detail::compare_influences(0.17, ib, 0.42, ia, 0.95,
                                                        inference::Convention::continuous);
  CHECK(ab.difference == -ba.difference);
  CHECK(ab.se_difference == ba.se_difference);
  CHECK(ab.z_stat == -ba.z_stat);
  CHECK(ab.p_value == ba.p_value);
  CHECK(ab.significant() == ba.significant());
}

TEST_CASE("the paired test holds its size when both estimators share a target") {
  // two asymptotically linear estimators of the same mean, fit on the same
  // draws: the plain average and a deterministically re-weighted average.
  // under this null the rejection rate at the 5% level must stay near 5%.
  const int reps = 500;
  const Eigen::Index n = 400;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i));
  const double wsum = w.sum();

  int rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    CounterRng rng(9000 + static_cast<std::uint64_t>(rep));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = std::exp(0.4 * rng.normal());

    const double mean_a = y.mean();
    const double mean_b = w.dot(y) / wsum;
    const Eigen::VectorXd inf_a = y.array() - mean_a;
    const Eigen::VectorXd inf_b =
        static_cast<double>(n) / wsum * (w.array() * (y.array() - mean_b));
    const auto res = inference::detail::compare_influences(
        mean_a, inf_a, mean_b, inf_b, 0.95, inference::Convention::continuous);
    if (res.significant()) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  INFO("rejection rate " << rate);
  CHECK(rate >= 0.01);
  CHECK(rate <= 0.11);
}

TEST_CASE("heterogeneity-driven gaps are detected, absent gaps are not", "[heavy]") {
  learn::LearnerConfig cfg;

  SECTION("the log-linear slope is rejected against the corrected estimate") {
    dgp::PopulationSpec spec;
    spec.coef_law = dgp::GaussianIndepCoef{0.0, 0.5, 0.25};
    spec.regressor_law = dgp::LogUniformX{1.0, std::exp(2.0)};
    spec.convention = dgp::Convention::elasticity;
    const Dataset d = dgp::simulate_cross_section(spec, 2000, 808);
    const baseline::FitResult ols = baseline::ols_loglog(d);
    const EstimateReport rep = dream::estimate(d, 5, cfg);

    const auto res = inference::compare_continuous(ols, rep);
    INFO("ols " << ols.coef("x") << " corrected " << rep.theta_hat << " z " << res.z_stat
                << " p " << res.p_value);
    CHECK(res.significant());
    CHECK(res.difference < 0.0);  // slope understates the average elasticity here
    CHECK(res.z_stat < -2.8);
    CHECK_FALSE(res.sign_flip);
  }

  SECTION("with homogeneous elasticities the comparison does not reject") {
    dgp::PopulationSpec spec;
    spec.coef_law = dgp::DegenerateCoef{0.3, 0.6};
    spec.regressor_law = dgp::LogUniformX{1.0, std::exp(2.0)};
    spec.noise = dgp::NoiseLaw{0.5};
    spec.convention = dgp::Convention::elasticity;
    const Dataset d = dgp::simulate_cross_section(spec, 1200, 19);
    const baseline::FitResult ols = baseline::ols_loglog(d);
    const EstimateReport rep = dream::estimate(d, 5, cfg);

    const auto res = inference::compare_continuous(ols, rep);
    INFO("ols " << ols.coef("x") << " corrected " << rep.theta_hat << " z " << res.z_stat
                << " p " << res.p_value);
    CHECK_FALSE(res.significant());
  }
}

TEST_CASE("discrete comparison rejects a slope distorted by arm-specific spread") {
  // log-variance differs across arms, so the exponentiated log-slope and the
  // arithmetic percentage change have different population values
  const Dataset d = selection_arms(4000, 0.3, 0.5, 1.0, 4242);
  const baseline::FitResult ols = baseline::ols_loglog(d);
  const EstimateReport rep = baseline::manning_binary(d);

  const auto res = inference::compare_discrete(ols, rep);
  INFO("exp(slope)-1 " << res.estimate_a << " arm ratio - 1 " << res.estimate_b << " z "
                       << res.z_stat);
  // population values: exp(0.3) - 1 = 0.350 vs exp(0.3 + (1 - 0.25)/2) - 1 = 0.964
  CHECK_THAT(res.estimate_a, WithinAbs(std::exp(0.3) - 1.0, 0.10));
  CHECK_THAT(res.estimate_b, WithinAbs(std::exp(0.675) - 1.0, 0.30));
  CHECK(res.difference < -0.3);
  CHECK(res.significant());
  CHECK(res.p_value < 1e-4);
  CHECK_FALSE(res.sign_flip);
}

TEST_CASE("the discrete rescaling multiplies the standard error by exp(slope)") {
  CounterRng rng(21);
  Eigen::VectorXd inf(200);
  for (Eigen::Index i = 0; i < inf.size(); ++i) inf[i] = rng.normal();
  const auto zero_rep = planted_report(0.0, Eigen::VectorXd::Zero(inf.size()));

  for (const double beta : {0.001, 0.005, 0.009, 0.05}) {
    const auto fit = planted_fit(beta, inf);
    const auto cont = inference::compare_continuous(fit, zero_rep);
    const auto disc = inference::compare_discrete(fit, zero_rep);
    const double ratio = disc.se_difference / cont.se_difference;
    CHECK_THAT(ratio, WithinAbs(std::exp(beta), 1e-12));
    CHECK_THAT(disc.estimate_a, WithinAbs(std::exp(beta) - 1.0, 1e-15));
    if (beta < 0.01) {
      // inside this range the exponential rescaling stays within one percent
      CHECK(std::fabs(ratio - 1.0) < 0.01);
    }
  }
}

TEST_CASE("batch summaries partition results into the published columns") {
  SECTION("a single insignificant comparison lands in the no-change column") {
    const auto t = inference::summarize_batch({fake_result(0.2, 0.25, 0.5, false)});
    CHECK(t.no_change == 1);
    CHECK(t.sig_different == 0);
    CHECK(t.effect_increase == 0);
    CHECK(t.effect_decrease == 0);
    CHECK(t.sign_change == 0);
    CHECK(t.total() == 1);
  }

  SECTION("the five percent convention splits just around the threshold") {
    CHECK(inference::summarize_batch({fake_result(0.2, 0.9, 0.051, false)}).no_change == 1);
    CHECK(inference::summarize_batch({fake_result(0.2, 0.9, 0.049, false)}).sig_different == 1);
  }

  SECTION("a significant sign flip is counted as different and as a sign change") {
    const auto t = inference::summarize_batch({fake_result(0.1, -0.2, 0.001, true)});
    CHECK(t.no_change == 0);
    CHECK(t.sig_different == 1);
    CHECK(t.sign_change == 1);
    CHECK(t.effect_increase == 0);
    CHECK(t.effect_decrease == 0);
  }

  SECTION("a planted batch reproduces its composition exactly") {
    std::vector<inference::ComparisonResult> rs;
    for (int i = 0; i < 20; ++i) rs.push_back(fake_result(0.2, 0.22, 0.40, false));
    for (int i = 0; i < 12; ++i) rs.push_back(fake_result(0.1, 0.30, 1e-4, false));
    for (int i = 0; i < 10; ++i) rs.push_back(fake_result(0.4, 0.10, 1e-4, false));
    for (int i = 0; i < 8; ++i) rs.push_back(fake_result(0.2, -0.30, 1e-4, true));
    const auto t = inference::summarize_batch(rs);
    CHECK(t.no_change == 20);
    CHECK(t.sig_different == 30);
    CHECK(t.effect_increase == 12);
    CHECK(t.effect_decrease == 10);
    CHECK(t.sign_change == 8);
    CHECK(t.total() == 50);
    // the significant results split into exactly one subcategory each
    CHECK(t.sig_different == t.effect_increase + t.effect_decrease + t.sign_change);

    const std::string csv = inference::to_csv({{"OLS", t}});
    CHECK(csv ==
          ",No Change,Sig. Different,Effect Increase,Effect Decrease,Sign Change\n"
          "OLS,20,30,12,10,8\n");
  }

  SECTION("an empty batch is an error") {
    CHECK_THROWS_AS(inference::summarize_batch({}), ParameterError);
  }
}

TEST_CASE("comparison results serialize with all published fields") {
  auto r = fake_result(0.35, 0.96, 0.002, false);
  r.se_difference = 0.07;
  r.z_stat = -8.7;
  r.convention = inference::Convention::discrete;
  const Json j = inference::to_json(r);
  CHECK(j["estimate_a"].get<double>() == 0.35);
  CHECK(j["estimate_b"].get<double>() == 0.96);
  CHECK(j["difference"].get<double>() == r.difference);
  CHECK(j["se_difference"].get<double>() == 0.07);
  CHECK(j["z_stat"].get<double>() == -8.7);
  CHECK(j["p_value"].get<double>() == 0.002);
  CHECK(j["convention"].get<std::string>() == "discrete");
  CHECK(j["sign_flip"].get<bool>() == false);
  CHECK(j["level"].get<double>() == 0.95);

  inference::BatchTable t;
  t.no_change = 31;
  t.sig_different = 19;
  t.effect_increase = 13;
  t.effect_decrease = 4;
  t.sign_change = 2;
  const Json jt = inference::to_json(t);
  CHECK(jt["no_change"].get<int>() == 31);
  CHECK(jt["sign_change"].get<int>() == 2);
}
