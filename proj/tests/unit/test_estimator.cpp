#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biasforge/error.hpp"
#include "biasforge/estimator.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

using namespace biasforge;

namespace {

DecisionLog small_log(std::size_t n, std::uint64_t seed, std::vector<DecisionRecord>* out = nullptr) {
  WorldConfig w = default_world_config();
  w.n_applicants = n;
  w.seed = seed;
  for (auto& b : w.true_beta)
    if (b.name == "constant") b.value = 0.0;
  const auto ds = simulate_full_sample(w);
  auto records = simulate_decisions(ds, table2_preset(), DecisionMode::SampleDecisions, seed + 1);
  if (out) *out = records;
  return make_decision_log(ds, records);
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK(parse_optimizer("bfgs") == OptimizerKind::QuasiNewton);
  CHECK(parse_optimizer("nelder_mead") == OptimizerKind::NelderMead);
  CHECK(parse_se_method("opg") == SeMethod::Opg);
  CHECK_THROWS_AS(parse_se_method("sandwich"), Error);

  const Json j = Json::parse(R"({"free_params": ["c_male", "beta_male"], "tol": 1e-7, "multistart": 2})");
  const auto cfg = estimation_config_from_json(j);
  CHECK(cfg.free_params.size() == 2);
  CHECK(cfg.tol == 1e-7);
  CHECK(cfg.initial == table2_preset());
  CHECK(estimation_config_from_json(estimation_config_to_json(cfg)).free_params == cfg.free_params);

  EstimationConfig bad = cfg;
  bad.free_params = {"c_male", "c_male"};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.free_params = {"beta.shoe_size"};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.perturbation = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  const auto free = default_free_params(table2_preset());
  CHECK(std::count(free.begin(), free.end(), "c_male") == 1);
  CHECK(std::count(free.begin(), free.end(), "alpha.D") == 0);
}

TEST_CASE("parameter transform") {
  ModelParams p = table2_preset();
  const std::vector<std::string> names{"beta.income", "z", "alpha.A", "alpha.H", "slope.D"};
  ParameterTransform tr(p, names);
  const Eigen::VectorXd u = tr.to_unconstrained(p);
  CHECK(u[1] == doctest::Approx(std::log(p.z)));
  const ModelParams back = tr.to_natural(u);
  for (const auto& n : names) CHECK(*get_parameter(back, n) == doctest::Approx(*get_parameter(p, n)).epsilon(1e-12));
  CHECK(*get_parameter(back, "alpha.D") == *get_parameter(p, "alpha.D"));

  const Eigen::MatrixXd jac = tr.jacobian(u);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double h = 1e-6;
    Eigen::VectorXd a = u, b = u;
    a[k] += h;
    b[k] -= h;
    const Eigen::VectorXd fd = (tr.natural_values(tr.to_natural(a)) - tr.natural_values(tr.to_natural(b))) / (2 * h);
    for (Eigen::Index r = 0; r < u.size(); ++r) CHECK(jac(r, k) == doctest::Approx(fd[r]).epsilon(1e-6).scale(1));
  }

  // Any unconstrained point maps to alphas inside the simplex.
  Eigen::VectorXd far = u;
  far[2] = 30.0;
  far[3] = 30.0;
  const ModelParams q = tr.to_natural(far);
  double s = 0.0;
  for (const char* n : {"alpha.D", "alpha.M", "alpha.A", "alpha.H"})
    if (auto v = get_parameter(q, n)) s += *v;
  CHECK(s < 1.0);

  ModelParams edge = p;
  set_parameter(edge, "alpha.A", 0.0);
  CHECK_THROWS_AS(ParameterTransform(edge, names).to_unconstrained(edge), Error);
}

TEST_CASE("log-likelihood matches replayed approval probabilities") {
  std::vector<DecisionRecord> records;
  const auto log = small_log(300, 21, &records);
  double expected = 0.0;
  for (const auto& r : records) {
    expected += std::log(*r.approved ? r.approval_prob : 1.0 - r.approval_prob);
  }
  // Every logged decision has a matching replayed record.
  CHECK(log.application_count() == records.size());
  CHECK(log_likelihood(log, table2_preset()) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(log_likelihood(DecisionLog{}, table2_preset()) == 0.0);

  LikelihoodModel m(log, table2_preset());
  const auto per = m.per_applicant(table2_preset());
  double sum = 0.0;
  for (double v : per) sum += v;
  CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("analytic gradient agrees with finite differences") {
  const auto log = small_log(300, 5);
  ModelParams p = table2_preset();
  set_parameter(p, "c_male", 0.1);
  set_parameter(p, "beta.income", 0.05);
  const std::vector<std::string> free{"beta.constant", "beta.income", "beta_male", "c_male", "z",
                                      "slope.A", "intercept.H", "alpha.A"};
  const auto g = log_likelihood_gradient(log, p, free);
  ParameterTransform tr(p, free);
  const Eigen::VectorXd u = tr.to_unconstrained(p);
  LikelihoodModel m(log, p);
  for (std::size_t k = 0; k < free.size(); ++k) {
    const double h = 1e-4 * (1 + std::abs(u[k]));
    auto at = [&](double step) {
      Eigen::VectorXd v = u;
      v[k] += step;
      return m.value(tr.to_natural(v));
    };
    const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    INFO(free[k]);
    CHECK(g.at(free[k]) == doctest::Approx(fd).epsilon(1e-6).scale(1));
  }
}

TEST_CASE("fit recovers a small free set") {
  const auto log = small_log(4000, 13);
  EstimationConfig cfg;
  cfg.initial = table2_preset();
  cfg.free_params = {"beta_male", "c_male"};
  cfg.multistart = 2;
  const auto report = fit(log, cfg);
  CHECK(report.converged);
  CHECK(report.gradient_norm_at_optimum <= cfg.tol);
  CHECK(report.starts.size() == 2);
  REQUIRE(report.std_errors.size() == 2);
  for (const auto& name : cfg.free_params) {
    const double est = *get_parameter(report.point_estimates, name);
    const double truth = *get_parameter(table2_preset(), name);
    CHECK(std::abs(est - truth) < 4 * report.std_errors.at(name));
  }
  CHECK(report.log_likelihood >= log_likelihood(log, table2_preset()) - 1e-9);

  EstimationConfig opg = cfg;
  opg.se_method = SeMethod::Opg;
  opg.multistart = 1;
  const auto r2 = fit(log, opg);
  CHECK(r2.std_errors.at("c_male") == doctest::Approx(report.std_errors.at("c_male")).epsilon(0.3));

  const Json j = to_json(report);
  for (const char* key : {"estimates", "std_errors", "loglik", "converged", "grad_norm", "n_obs"})
    CHECK(j.contains(key));
}

TEST_CASE("unidentified parameter leaves standard errors absent") {
  auto log = small_log(600, 17);
  for (auto& prof : log.profiles) prof.gender = Gender::Female;
  EstimationConfig cfg;
  cfg.initial = table2_preset();
  cfg.free_params = {"beta.constant", "beta_male"};
  cfg.multistart = 1;
  const auto report = fit(log, cfg);
  CHECK(report.std_errors.empty());
  CHECK_FALSE(report.diagnostic.empty());
}

TEST_CASE("empty log and bad logs") {
  EstimationConfig cfg;
  cfg.initial = table2_preset();
  cfg.free_params = {"c_male"};
  CHECK_THROWS_AS(fit(DecisionLog{}, cfg), Error);

  auto log = small_log(200, 3);
  for (std::size_t i = 0; i < log.histories.size(); ++i) {
    if (log.histories[i].size() > 1 && log.histories[i][0].approved) {
      log.histories[i][0].signals.reset();
      try {
        LikelihoodModel(log, table2_preset());
        FAIL("expected a data error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
      }
      return;
    }
  }
  FAIL("no repeat applicant in the fixture");
}
