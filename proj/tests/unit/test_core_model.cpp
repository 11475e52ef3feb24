#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biasforge/core_model.hpp"
#include "biasforge/error.hpp"
#include "biasforge/params_io.hpp"

using namespace biasforge;

namespace {

ApplicantProfile profile(Gender g, double education = 0, double income = 0) {
  ApplicantProfile p;
  p.id = "1";
  p.gender = g;
  p.covariates = {{"constant", 1.0}, {"first_app_month", 0.0}, {"housing", 0.0},
                  {"education", education}, {"income", income}, {"dpi", 0.0}};
  return p;
}

RepaymentSignals signals(double d, double m, double a, double h) {
  RepaymentSignals s;
  s.overdue_days = d;
  s.overdue_frac = m;
  s.attitude_frac = a;
  s.help_frac = h;
  return s;
}

ModelParams only_attitude(double weight) {
  ModelParams p = table2_preset();
  p.signal_maps = {{SignalKind::A, {0.3492, 0.3788, weight, SignalTransform::Identity}}};
  return p;
}

}  // namespace

TEST_CASE("logistic kernel") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(-1.0003) == doctest::Approx(0.26888244187878024).epsilon(1e-14));
  CHECK(logistic(-0.2390) == doctest::Approx(0.44053279970872855).epsilon(1e-14));
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(std::isfinite(logistic(-800.0)));
}

TEST_CASE("prior mean") {
  const ModelParams p = table2_preset();
  CHECK(std::abs(prior_quality_mean(profile(Gender::Male), p) - (-1.0003)) < 1e-12);
  CHECK(std::abs(prior_quality_mean(profile(Gender::Female, 2, 3), p) - (-0.12670000000000003)) <
        1e-12);
  CHECK(initial_belief(profile(Gender::Female), p).variance == 1.0);

  ApplicantProfile missing = profile(Gender::Female);
  missing.covariates.erase("dpi");
  CHECK_THROWS_AS(prior_quality_mean(missing, p), Error);
  ApplicantProfile extra = profile(Gender::Female);
  extra.covariates["age"] = 30;
  CHECK_THROWS_AS(prior_quality_mean(extra, p), Error);
}

TEST_CASE("retention factor of the reference weights") {
  const ModelParams p = table2_preset();
  CHECK(std::abs((1.0 - p.weight_sum()) - 0.00019999999999997797) < 1e-15);
}

TEST_CASE("signal implied quality") {
  const ModelParams p = table2_preset();
  const auto s = signals(0, 0, 1.0, 0);
  CHECK(signal_implied_quality(s, SignalKind::A, p) == doctest::Approx(1.7789232531500572).epsilon(1e-14));
  CHECK_THROWS_AS(signal_implied_quality(s, SignalKind::M, p), Error);
}

TEST_CASE("weighted-sum update") {
  SUBCASE("single map") {
    const auto b = update_belief({0.0, 1.0}, signals(0, 0, 1.0, 0), only_attitude(0.978));
    CHECK(b.mean == doctest::Approx(1.739786941580756).epsilon(1e-14));
    CHECK(b.variance == 1.0);
  }
  SUBCASE("reference maps") {
    const auto s = signals(3.0, 0.0, 0.9, 0.2);
    const ModelParams p = table2_preset();
    CHECK(std::abs(update_belief({0.0, 1.0}, s, p).mean - 0.8530599377599275) < 1e-12);
    CHECK(std::abs(update_belief({-0.5, 1.0}, s, p).mean - 0.8529599377599275) < 1e-12);
  }
  SUBCASE("weights above one") {
    CHECK_THROWS_AS(update_belief({0.0, 1.0}, signals(0, 0, 1, 0), only_attitude(1.2)), Error);
  }
  SUBCASE("no maps leaves the belief") {
    ModelParams p = table2_preset();
    p.signal_maps.clear();
    CHECK(update_belief({0.7, 1.0}, signals(1, 0, 1, 0), p).mean == 0.7);
  }
}

TEST_CASE("conjugate update") {
  ModelParams p = table2_preset();
  p.updater = Updater::ConjugateBayes;
  p.signal_maps = {{SignalKind::A, {1.0, 0.0, 0.0, SignalTransform::Identity}}};
  p.signal_noise_sd = {{SignalKind::A, 1.0}};
  const auto b = advance_belief({0.0, 1.0}, signals(0, 0, 1.0, 0), p);
  CHECK(b.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.variance == doctest::Approx(0.5).epsilon(1e-15));

  p.signal_noise_sd.clear();
  CHECK_THROWS_AS(update_belief_bayes({0.0, 1.0}, signals(0, 0, 1, 0), p), Error);
  p.signal_noise_sd = {{SignalKind::A, 1.0}};
  CHECK_THROWS_AS(update_belief_bayes({0.0, 0.0}, signals(0, 0, 1, 0), p), Error);
}

TEST_CASE("approval probability") {
  const ModelParams p = table2_preset();
  LoanTerms t;
  t.amount = 460;
  t.term_months = 6;
  t.gain_if_repaid = 100;
  t.loss_if_default = 460;
  CHECK(approval_prob(0.9, t, Gender::Female, p) == doctest::Approx(0.6632028319474459).epsilon(1e-13));
  CHECK(approval_prob(0.9, t, Gender::Male, p) == doctest::Approx(0.6079253882581054).epsilon(1e-13));
  t.gain_if_repaid = 81;
  t.loss_if_default = 450;
  CHECK(approval_prob(0.9, t, Gender::Female, p) == doctest::Approx(0.6057924766493251).epsilon(1e-13));
  CHECK(shock_cdf(0.0, ShockDistribution::Normal) == 0.5);
  CHECK(shock_cdf(0.3, ShockDistribution::Normal) == doctest::Approx(0.6179114221889526).epsilon(1e-13));
  CHECK(shock_cdf(-2.5, ShockDistribution::Normal) == doctest::Approx(0.006209665325776132).epsilon(1e-12));
}

TEST_CASE("loan contract") {
  const auto t = LoanTerms::from_contract(460, 6, 0.14);
  CHECK(t.gain_if_repaid == doctest::Approx(32.2).epsilon(1e-14));
  CHECK(t.loss_if_default == 460);
  CHECK_NOTHROW(t.validate());
  LoanTerms bad = t;
  bad.amount = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("parameter validation") {
  ModelParams p = table2_preset();
  CHECK_NOTHROW(p.validate());
  SUBCASE("slope below tolerance") {
    p.signal_maps[SignalKind::A].slope = 1e-9;
    try {
      p.validate();
      FAIL("expected a singularity error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Singularity);
    }
  }
  SUBCASE("non-positive price") {
    p.z = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
  }
  SUBCASE("negative weight") {
    p.signal_maps[SignalKind::D].weight = -0.01;
    CHECK_THROWS_AS(p.validate(), Error);
  }
}

TEST_CASE("named parameters") {
  ModelParams p = table2_preset();
  const auto names = parameter_names(p);
  CHECK(names.front() == "beta.constant");
  CHECK(std::find(names.begin(), names.end(), "alpha.A") != names.end());
  CHECK(std::find(names.begin(), names.end(), "alpha.M") == names.end());
  for (const auto& n : names) {
    const double v = *get_parameter(p, n);
    set_parameter(p, n, v + 0.25);
    CHECK(*get_parameter(p, n) == v + 0.25);
  }
  CHECK_FALSE(get_parameter(p, "nonsense").has_value());
  CHECK_THROWS_AS(set_parameter(p, "slope.M", 1.0), Error);
}

TEST_CASE("text forms") {
  CHECK(parse_gender("male") == Gender::Male);
  CHECK(parse_signal("H") == SignalKind::H);
  CHECK(parse_transform("log1p") == SignalTransform::Log1p);
  CHECK(parse_updater("conjugate_bayes") == Updater::ConjugateBayes);
  CHECK(parse_shock("normal") == ShockDistribution::Normal);
  CHECK_THROWS_AS(parse_gender("x"), Error);
}
