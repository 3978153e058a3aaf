#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "elast/baseline.hpp"
#include "elast/dgp.hpp"
#include "elast/dream.hpp"
#include "test_util.hpp"

using namespace elast;
using Catch::Matchers::WithinAbs;

namespace {

dgp::PopulationSpec wedge_population() {
  dgp::PopulationSpec s;
  s.coef_law = dgp::GaussianIndepCoef{0.0, 0.5, 0.25};
  s.regressor_law = dgp::LogUniformX{1.0, std::exp(2.0)};
  s.convention = dgp::Convention::elasticity;
  return s;
}

// single-affine-layer net computing w . input + b exactly (no hidden layers)
learn::MlpModel affine_net(const Eigen::VectorXd& w, double b) {
  learn::MlpModel m;
  m.weights.push_back(w.transpose());
  m.biases.push_back(Eigen::VectorXd::Constant(1, b));
  m.input_mean = Eigen::VectorXd::Zero(w.size());
  m.input_scale = Eigen::VectorXd::Ones(w.size());
  return m;
}

// constant-output net of a given input width
learn::MlpModel constant_net(Eigen::Index in_dim, double value) {
  return affine_net(Eigen::VectorXd::Zero(in_dim), value);
}

learn::LearnerConfig tiny(std::uint64_t seed) {
  learn::LearnerConfig c;
  c.hidden = {8, 8};
  c.max_epochs = 60;
  c.patience = 20;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("fold plans are balanced, deterministic, and validated") {
  SECTION("n=10, K=5 gives folds of size two") {
    const CrossFitPlan p = make_plan(10, 5, 3);
    for (Eigen::Index s : p.fold_sizes()) CHECK(s == 2);
  }
  SECTION("n=103, K=5 gives sizes in {20, 21} summing to n") {
    const CrossFitPlan p = make_plan(103, 5, 3);
    Eigen::Index total = 0;
    for (Eigen::Index s : p.fold_sizes()) {
      CHECK((s == 20 || s == 21));
      total += s;
    }
    CHECK(total == 103);
  }
  SECTION("assignment is a partition hit by fold() and complement()") {
    const CrossFitPlan p = make_plan(23, 4, 9);
    std::set<Eigen::Index> seen;
    for (int k = 0; k < p.K; ++k) {
      const auto in = p.fold(k);
      const auto out = p.complement(k);
      CHECK(!in.empty());
      CHECK(in.size() + out.size() == 23);
      for (Eigen::Index i : in) {
        CHECK(p.assignment[static_cast<std::size_t>(i)] == k);
        seen.insert(i);
      }
    }
    CHECK(seen.size() == 23);
  }
  SECTION("deterministic in the seed") {
    const CrossFitPlan a = make_plan(103, 5, 7), b = make_plan(103, 5, 7);
    CHECK(a.assignment == b.assignment);
    const CrossFitPlan c = make_plan(103, 5, 8);
    CHECK(a.assignment != c.assignment);
  }
  SECTION("shuffling actually mixes") {
    const CrossFitPlan p = make_plan(100, 5, 1);
    // a round-robin deal without shuffling would put rows 0..19 in fold 0
    bool fold0_is_prefix = true;
    for (Eigen::Index i : p.fold(0)) fold0_is_prefix = fold0_is_prefix && i < 20;
    CHECK(!fold0_is_prefix);
  }
  SECTION("preconditions") {
    CHECK_THROWS_AS(make_plan(9, 5, 0), ParameterError);
    CHECK_THROWS_AS(make_plan(100, 1, 0), ParameterError);
  }
}

TEST_CASE("score contributions follow the debiased formula") {
  SECTION("homogeneous noiseless data: every correction term vanishes") {
    const double beta = 0.7;
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(2);
    nu.lin[1] = beta;                 // log y = 0 + beta x
    nu.m_hat = constant_net(1, 1.0);  // m == 1
    nu.s_hat.net = constant_net(2, 0.0);
    nu.s_hat.eval_scale = 0.25;  // score == 0
    const double x = 1.3, y = std::exp(beta * x);
    const Eigen::VectorXd z(0);
    CHECK_THAT(dream::score_contribution(y, x, z, nu, 0.0), WithinAbs(beta, 1e-15));
    CHECK_THAT(dream::score_contribution(y, x, z, nu, 0.3), WithinAbs(beta - 0.3, 1e-15));
  }

  SECTION("fitted nuisances: defining identity, dual formula, affine theta dependence") {
    // small real fits so the nuisance functions have nontrivial shape
    CounterRng rng(21);
    const Eigen::Index n = 120;
    Eigen::MatrixXd feats(n, 2);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      feats(i, 0) = rng.child("x").normal_at(u);
      feats(i, 1) = rng.child("z").normal_at(u);
      target[i] = std::exp(0.3 * feats(i, 0)) + 0.1 * rng.child("e").normal_at(u);
    }
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(3);
    nu.lin << 0.2, 0.5, -0.3;  // intercept, x, z1
    nu.m_hat = learn::fit_regression(feats, target, tiny(4));
    nu.s_hat = learn::fit_conditional_score(feats.col(0), feats.rightCols(1), tiny(5));

    const double y = 1.7, x = 0.4;
    Eigen::VectorXd z(1);
    z << -0.8;

    // independently assembled formula
    const double beta = nu.lin[1];
    const double u = std::log(y) - (nu.lin[0] + nu.lin[1] * x + nu.lin[2] * z[0]);
    Eigen::VectorXd f(2);
    f << x, z[0];
    const double m = std::max(nu.m_hat.value(f), 1e-3);
    const double mp = nu.m_hat.input_gradient(f)[0];
    const double s = nu.s_hat.score(x, z);
    const double by_hand = beta + mp / m + (-s / m) * (std::exp(u) - m);

    CHECK_THAT(dream::score_contribution(y, x, z, nu, 0.0), WithinAbs(by_hand, 1e-12));

    // plugging the solving value back in zeroes the contribution
    CHECK_THAT(dream::score_contribution(y, x, z, nu, by_hand), WithinAbs(0.0, 1e-12));

    // contribution is affine in theta with slope exactly -1
    const double c0 = dream::score_contribution(y, x, z, nu, 0.0);
    for (const double th : {-2.0, -0.5, 0.25, 1.0, 3.0})
      CHECK_THAT(dream::score_contribution(y, x, z, nu, th) - c0, WithinAbs(-th, 1e-12));
  }

  SECTION("a conditional mean under the floor is clamped and flagged") {
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(2);
    nu.m_hat = constant_net(1, 1e-6);
    nu.s_hat.net = constant_net(2, 0.05);
    nu.s_hat.eval_scale = 0.5;
    bool clamped = false;
    CHECK(nu.mean_at(0.0, Eigen::VectorXd(0), &clamped) == 1e-3);
    CHECK(clamped);
    const double c = dream::score_contribution(1.0, 0.0, Eigen::VectorXd(0), nu, 0.0, &clamped);
    CHECK(clamped);
    CHECK(std::isfinite(c));
  }

  SECTION("nonpositive outcomes are rejected") {
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(2);
    nu.m_hat = constant_net(1, 1.0);
    nu.s_hat.net = constant_net(2, 0.0);
    nu.s_hat.eval_scale = 1.0;
    CHECK_THROWS_AS(dream::score_contribution(0.0, 1.0, Eigen::VectorXd(0), nu, 0.0),
                    ParameterError);
  }
}

TEST_CASE("nuisance fits honor the fold partition") {
  CounterRng rng(31);
  const Eigen::Index n = 240;
  Dataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.controls.resize(n, 2);
  d.instruments.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    d.controls(i, 0) = rng.child("z1").normal_at(u);
    d.controls(i, 1) = rng.child("z2").normal_at(u);
    d.x[i] = 0.3 * d.controls(i, 0) + rng.child("x").normal_at(u);
    d.y[i] = std::exp(0.5 * d.x[i] + 0.2 * d.controls(i, 0) - 0.1 * d.controls(i, 1) +
                      0.3 * rng.child("e").normal_at(u));
  }
  const CrossFitPlan plan = make_plan(n, 3, 11);
  const dream::NuisanceSet nuis = dream::fit_nuisances(d, plan, tiny(12));
  REQUIRE(nuis.folds.size() == 3);
  for (int k = 0; k < 3; ++k) {
    const auto& nu = nuis.folds[static_cast<std::size_t>(k)];
    CHECK(nu.trained_rows == plan.complement(k));
    // no held-out row participates in training
    for (Eigen::Index i : plan.fold(k))
      CHECK(std::find(nu.trained_rows.begin(), nu.trained_rows.end(), i) ==
            nu.trained_rows.end());
    CHECK(nu.lin.size() == 4);  // intercept, x, two controls
    CHECK(nu.m_hat.in_dim() == 3);
  }
  // folds see different data, so the linear pieces differ
  CHECK(nuis.folds[0].lin != nuis.folds[1].lin);
  // every observation is scored strictly out of fold
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nu = nuis.for_row(i);
    CHECK(std::find(nu.trained_rows.begin(), nu.trained_rows.end(), i) == nu.trained_rows.end());
  }
}

TEST_CASE("estimator recovers the oracle on the wedge fixture", "[heavy]") {
  const dgp::PopulationSpec spec = wedge_population();
  const Dataset d = dgp::simulate_cross_section(spec, 5000, 101);
  learn::LearnerConfig cfg;
  cfg.seed = 7;
  const EstimateReport r = dream::estimate(d, 5, cfg);
  const dgp::McValue oracle = dgp::true_average_arithmetic_elasticity(spec, 400000, 999);

  REQUIRE_THAT(oracle.value, WithinAbs(0.75, 4 * oracle.mc_se + 1e-12));
  CHECK(std::fabs(r.theta_hat - oracle.value) <= 3.0 * r.se);
  CHECK(r.se > 0.0);

  // the uncorrected log-log slope sits at 0.5, a wedge of 0.25 below
  const baseline::FitResult ols = baseline::ols_loglog(d);
  CHECK(std::fabs(ols.coef("x") - 0.5) <= 3.0 * ols.se("x"));
  CHECK(r.theta_hat - ols.coef("x") > 0.15);

  // score bookkeeping at the solution
  CHECK(std::fabs(r.scores.mean()) < 1e-10);
  const double v_raw = r.scores.array().square().mean();
  const double v_centered = (r.scores.array() - r.scores.mean()).square().mean();
  CHECK(std::fabs(v_raw - v_centered) <= 1e-10 * v_raw);
  CHECK_THAT(r.se, WithinAbs(std::sqrt(v_raw / static_cast<double>(r.n)), 1e-14));

  // clean run: every fold balanced, no clamping, no warnings
  for (const auto& fs : r.diagnostics["fold_sizes"]) CHECK(fs.get<Eigen::Index>() == 1000);
  CHECK(r.diagnostics["clamp_hits"].get<Eigen::Index>() == 0);
  CHECK(r.diagnostics["warnings"].empty());
  CHECK(r.method == "dream");
  CHECK(r.folds == 5);
}

TEST_CASE("no-wedge data leaves nothing for the correction to move", "[heavy]") {
  // degenerate coefficient, multiplicative noise independent of x: the
  // arithmetic-mean target equals the log-log slope
  dgp::PopulationSpec spec;
  spec.coef_law = dgp::DegenerateCoef{0.3, 0.6};
  spec.regressor_law = dgp::LogUniformX{1.0, std::exp(2.0)};
  spec.noise = dgp::NoiseLaw{0.5};
  spec.convention = dgp::Convention::elasticity;
  const Dataset d = dgp::simulate_cross_section(spec, 2000, 55);
  learn::LearnerConfig cfg;
  cfg.seed = 9;
  const EstimateReport r = dream::estimate(d, 5, cfg);
  const baseline::FitResult ols = baseline::ols_loglog(d);
  CHECK(std::fabs(r.theta_hat - ols.coef("x")) <= 2.0 * r.se);
  CHECK(std::fabs(r.theta_hat - 0.6) <= 3.0 * r.se);
}

TEST_CASE("estimates are reproducible bit for bit") {
  dgp::PopulationSpec spec = wedge_population();
  const Dataset d = dgp::simulate_cross_section(spec, 400, 77);
  const EstimateReport a = dream::estimate(d, 2, tiny(3));
  const EstimateReport b = dream::estimate(d, 2, tiny(3));
  CHECK(a.theta_hat == b.theta_hat);
  CHECK(a.se == b.se);
  CHECK(a.scores == b.scores);
  CHECK(a.config_hash_hex == b.config_hash_hex);
  CHECK(a.dataset_hash_hex == b.dataset_hash_hex);
  const EstimateReport c = dream::estimate(d, 2, tiny(4));
  CHECK(a.theta_hat != c.theta_hat);
}

TEST_CASE("degenerate treatments are routed or rejected") {
  SECTION("a 0/1 treatment goes to the exact binary estimator") {
    CounterRng rng(41);
    const Eigen::Index n = 80;
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      d.x[i] = i < n / 2 ? 0.0 : 1.0;
      d.y[i] = std::exp(0.4 * d.x[i] + 0.2 * rng.child("e").normal_at(u));
    }
    const EstimateReport r = dream::estimate(d, 5, tiny(1));
    CHECK(r.method == "manning_binary");
    CHECK(r.diagnostics.contains("notice"));
    const EstimateReport direct = baseline::manning_binary(d);
    CHECK(r.theta_hat == direct.theta_hat);
  }
  SECTION("a two-valued treatment off 0/1 is rejected with guidance") {
    Dataset d;
    d.y = Eigen::VectorXd::Ones(40);
    d.x.resize(40);
    for (Eigen::Index i = 0; i < 40; ++i) d.x[i] = i % 2 == 0 ? 1.0 : 3.0;
    d.controls.resize(40, 0);
    d.instruments.resize(40, 0);
    CHECK_THROWS_WITH(dream::estimate(d, 5, tiny(1)),
                      Catch::Matchers::ContainsSubstring("recode"));
  }
  SECTION("constant treatment is rejected") {
    Dataset d;
    d.y = Eigen::VectorXd::Ones(40);
    d.x = Eigen::VectorXd::Constant(40, 2.0);
    d.controls.resize(40, 0);
    d.instruments.resize(40, 0);
    CHECK_THROWS_AS(dream::estimate(d, 5, tiny(1)), ParameterError);
  }
  SECTION("a coarse discrete treatment fits but warns") {
    CounterRng rng(43);
    const Eigen::Index n = 150;
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      d.x[i] = 1.0 + static_cast<double>(i % 5);
      d.y[i] = std::exp(0.3 * d.x[i] + 0.2 * rng.child("e").normal_at(u));
    }
    const EstimateReport r = dream::estimate(d, 3, tiny(2));
    bool warned = false;
    for (const auto& w : r.diagnostics["warnings"])
      warned = warned || w.get<std::string>().find("distinct") != std::string::npos;
    CHECK(warned);
  }
}

TEST_CASE("orthogonality audit shows first-order insensitivity", "[heavy]") {
  const std::vector<double> grid{-1.0, -0.5, 0.0, 0.5, 1.0};

  SECTION("exact nuisances: conditional-mean direction is second order") {
    // heterogeneous fixture with closed-form nuisances: x Gaussian, and the
    // noise e^u = (1 + kappa x) eta with unit-mean lognormal eta, so the
    // conditional mean of e^u is exactly affine in x
    const double beta = 0.5, kappa = 0.5, mu = 1.0, sx = 0.5;
    CounterRng rng(17);
    const Eigen::Index n = 400000;
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      d.x[i] = mu + sx * rng.child("x").normal_at(u);
      const double eta = std::exp(0.2 * rng.child("e").normal_at(u) - 0.02);
      d.y[i] = std::exp(beta * d.x[i]) * (1.0 + kappa * d.x[i]) * eta;
    }
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(2);
    nu.lin << 0.0, beta;
    Eigen::VectorXd wm(1);
    wm << kappa;
    nu.m_hat = affine_net(wm, 1.0);
    Eigen::VectorXd ws(2);
    ws << -1.0 / (sx * sx), 0.0;
    nu.s_hat.net = affine_net(ws, mu / (sx * sx));
    nu.s_hat.eval_scale = 1.0;
    dream::NuisanceSet nuis;
    nuis.plan.n = n;
    nuis.plan.K = 2;
    nuis.plan.seed = 0;
    nuis.plan.assignment.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = n / 2; i < n; ++i)
      nuis.plan.assignment[static_cast<std::size_t>(i)] = 1;
    nuis.folds = {nu, nu};

    const dream::AuditResult ortho =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::m, grid);
    const dream::AuditResult plug = dream::orthogonality_audit(
        d, nuis, dream::PerturbDirection::m, grid, dream::ScoreForm::plug_in);
    CAPTURE(ortho.slope0, ortho.curvature, plug.slope0);
    // first-order term drowned by the quadratic over the audited range
    CHECK(std::fabs(ortho.slope0) < 0.3 * std::fabs(ortho.curvature) * 1.0);
    // the uncorrected score keeps its first-order sensitivity
    CHECK(std::fabs(plug.slope0) > 0.01);
    CHECK(std::fabs(plug.slope0) >= 5.0 * std::fabs(ortho.slope0));

    // shifting the density score enters the contribution linearly in t, so
    // the audited mean is exactly affine: zero curvature, tiny slope
    const dream::AuditResult sdir =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::score, grid);
    CHECK(std::fabs(sdir.slope0) < 2e-3);
    CHECK(std::fabs(sdir.curvature) < 1e-10);

    const dream::AuditResult bdir =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::beta, grid);
    const dream::AuditResult bplug = dream::orthogonality_audit(
        d, nuis, dream::PerturbDirection::beta, grid, dream::ScoreForm::plug_in);
    CHECK(std::fabs(bdir.slope0) < 2e-3);
    CHECK_THAT(bplug.slope0, WithinAbs(0.1, 1e-9));
    CHECK(std::fabs(bplug.slope0) >= 5.0 * std::fabs(bdir.slope0));
  }

  SECTION("fitted nuisances: the correction's sensitivity stays bounded") {
    // Gaussian regressor so the density score is well behaved; the audit at
    // fitted nuisances reads curvature x fit error, so only coarse bounds
    // are stable at this sample size
    CounterRng rng(13);
    const Eigen::Index n = 2000;
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      d.x[i] = 1.0 + 0.5 * rng.child("x").normal_at(u);
      const double eps = 0.5 + 0.5 * rng.child("c").normal_at(u);
      d.y[i] = std::exp(eps * d.x[i]);
    }
    learn::LearnerConfig cfg;
    cfg.seed = 5;
    const CrossFitPlan plan = make_plan(d.n(), 2, cfg.seed);
    const dream::NuisanceSet nuis = dream::fit_nuisances(d, plan, cfg);

    const dream::AuditResult ortho =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::m, grid);
    const dream::AuditResult plug = dream::orthogonality_audit(
        d, nuis, dream::PerturbDirection::m, grid, dream::ScoreForm::plug_in);
    CAPTURE(ortho.slope0, ortho.curvature, plug.slope0);
    CHECK(std::fabs(plug.slope0) > 0.005);
    CHECK(std::fabs(ortho.slope0) < 0.05);

    const dream::AuditResult sdir =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::score, grid);
    CHECK(std::fabs(sdir.slope0) < 0.05);
  }

  SECTION("exact nuisances: slope in the linear-coefficient direction vanishes") {
    // homogeneous lognormal fixture with closed-form nuisances
    const double beta = 0.5, a0 = 0.2, mu = 1.0, sx = 0.8, se = 0.4;
    CounterRng rng(17);
    const Eigen::Index n = 20000;
    Dataset d;
    d.y.resize(n);
    d.x.resize(n);
    d.controls.resize(n, 0);
    d.instruments.resize(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      d.x[i] = mu + sx * rng.child("x").normal_at(u);
      d.y[i] = std::exp(a0 + beta * d.x[i] + se * rng.child("e").normal_at(u));
    }
    dream::FoldNuisance nu;
    nu.lin = Eigen::VectorXd::Zero(2);
    nu.lin << a0, beta;
    nu.m_hat = constant_net(1, std::exp(se * se / 2.0));  // E e^u for lognormal noise
    Eigen::VectorXd w(2);
    w << -1.0 / (sx * sx), 0.0;  // d/dx log normal density, net inputs (x, noise scale)
    nu.s_hat.net = affine_net(w, mu / (sx * sx));
    nu.s_hat.eval_scale = 1.0;

    dream::NuisanceSet nuis;
    nuis.plan.n = n;
    nuis.plan.K = 2;
    nuis.plan.seed = 0;
    nuis.plan.assignment.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = n / 2; i < n; ++i)
      nuis.plan.assignment[static_cast<std::size_t>(i)] = 1;
    nuis.folds = {nu, nu};

    const dream::AuditResult ortho =
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::beta, grid);
    const dream::AuditResult plug = dream::orthogonality_audit(
        d, nuis, dream::PerturbDirection::beta, grid, dream::ScoreForm::plug_in);
    CAPTURE(ortho.slope0, plug.slope0);
    // exact first-order cancellation up to sampling noise ~ c/sqrt(n)
    CHECK(std::fabs(ortho.slope0) < 0.01);
    // the uncorrected score moves one for one with the perturbed coefficient
    CHECK_THAT(plug.slope0, WithinAbs(0.1, 1e-9));
    CHECK(std::fabs(plug.slope0) >= 5.0 * std::fabs(ortho.slope0));
  }

  SECTION("grid validation") {
    const dgp::PopulationSpec spec = wedge_population();
    const Dataset d = dgp::simulate_cross_section(spec, 100, 3);
    dream::NuisanceSet nuis;
    nuis.plan = make_plan(100, 2, 0);
    nuis.folds.resize(2);
    CHECK_THROWS_AS(
        dream::orthogonality_audit(d, nuis, dream::PerturbDirection::m, {0.0, 1.0}),
        ParameterError);
  }
}

// opt-in long-running check, exercised routinely by the acceptance suite
TEST_CASE("confidence intervals cover the oracle across replications", "[.][coverage]") {
  const dgp::PopulationSpec spec = wedge_population();
  const dgp::McValue oracle = dgp::true_average_arithmetic_elasticity(spec, 400000, 999);
  int covered = 0, ols_covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset d = dgp::simulate_cross_section(spec, 2000, 10000 + static_cast<std::uint64_t>(rep));
    learn::LearnerConfig cfg;
    cfg.seed = 20000 + static_cast<std::uint64_t>(rep);
    const EstimateReport r = dream::estimate(d, 5, cfg);
    covered += r.covers(oracle.value) ? 1 : 0;
    const baseline::FitResult ols = baseline::ols_loglog(d);
    const double zq = normal_icdf(0.975);
    ols_covered += (std::fabs(ols.coef("x") - oracle.value) <= zq * ols.se("x")) ? 1 : 0;
  }
  const double rate = static_cast<double>(covered) / reps;
  CAPTURE(rate, ols_covered);
  CHECK(rate >= 0.88);
  CHECK(rate <= 0.99);
  CHECK(static_cast<double>(ols_covered) / reps < 0.5);
}
