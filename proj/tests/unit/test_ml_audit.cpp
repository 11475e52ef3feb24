#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biasforge/boosting.hpp"
#include "biasforge/error.hpp"
#include "biasforge/ml_audit.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

using namespace biasforge;

namespace {

FeatureMatrix step_data(std::vector<int>& labels) {
  FeatureMatrix x;
  x.names = {"x"};
  for (int i = 0; i < 100; ++i) {
    x.values.push_back(i);
    labels.push_back(i >= 50 ? 1 : 0);
  }
  x.rows = 100;
  return x;
}

FullSampleDataset world(std::size_t n, std::uint64_t seed) {
  WorldConfig w = default_world_config();
  w.n_applicants = n;
  w.seed = seed;
  return simulate_full_sample(w);
}

}  // namespace

TEST_CASE("single boosted stump") {
  std::vector<int> y;
  const FeatureMatrix x = step_data(y);
  BoostingParams bp;
  bp.n_rounds = 1;
  bp.max_depth = 1;
  bp.learning_rate = 1.0;
  bp.min_leaf = 1;
  bp.lambda = 1.0;
  const auto model = BoostedTrees::train(x, y, bp, 3);
  CHECK(model.tree_count() == 1);
  // Base score 0, gradients -/+0.5, hessians 0.25: leaf = -25 / (12.5 + 1).
  const double leaf = 25.0 / 13.5;
  const double lo = 10.0, hi = 80.0;
  CHECK(model.margin(&lo) == doctest::Approx(-leaf).epsilon(1e-14));
  CHECK(model.margin(&hi) == doctest::Approx(leaf).epsilon(1e-14));
  CHECK(model.predict(&hi) == doctest::Approx(logistic(leaf)).epsilon(1e-14));
  const double edge_lo = 49.0, edge_hi = 50.0;
  CHECK(model.margin(&edge_lo) < 0.0);
  CHECK(model.margin(&edge_hi) > 0.0);
}

TEST_CASE("boosting reduces training loss and round-trips through json") {
  const auto ds = world(2000, 3);
  const FeatureMatrix x = application_features(ds, false, true);
  std::vector<int> y;
  for (const auto& h : ds.histories)
    for (const auto& app : h) y.push_back(app.outcome == Outcome::Repaid ? 1 : 0);
  REQUIRE(y.size() == x.rows);

  BoostingParams few;
  few.n_rounds = 5;
  BoostingParams many;
  many.n_rounds = 60;
  const auto a = BoostedTrees::train(x, y, few, 1);
  const auto b = BoostedTrees::train(x, y, many, 1);
  CHECK(log_loss(b, x, y) < log_loss(a, x, y));

  const auto back = BoostedTrees::from_json(Json::parse(dump_json(b.to_json())));
  for (std::size_t r = 0; r < x.rows; r += 37) CHECK(back.predict(x.row(r)) == b.predict(x.row(r)));
  CHECK(dump_json(back.to_json()) == dump_json(b.to_json()));

  const auto again = BoostedTrees::train(x, y, many, 1);
  CHECK(dump_json(again.to_json()) == dump_json(b.to_json()));
}

TEST_CASE("degenerate training data") {
  FeatureMatrix x;
  x.names = {"x"};
  x.values = {1, 2, 3};
  x.rows = 3;
  const std::vector<int> y{1, 1, 1};
  try {
    BoostedTrees::train(x, y, BoostingParams{}, 1);
    FAIL("expected a degenerate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
  CHECK_THROWS_AS(LogisticModel::train(x, y), Error);
  BoostingParams bad;
  bad.max_bins = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("logistic model learns a monotone step") {
  std::vector<int> y;
  FeatureMatrix x = step_data(y);
  // Flip two labels so the maximum likelihood estimate is finite.
  y[48] = 1;
  y[52] = 0;
  const auto m = LogisticModel::train(x, y);
  const double lo = 10.0, mid = 49.5, hi = 90.0;
  CHECK(m.predict(&lo) < 0.05);
  CHECK(m.predict(&hi) > 0.95);
  CHECK(m.predict(&mid) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(m.to_json()["type"] == "logistic");
}

TEST_CASE("application features") {
  const auto ds = world(300, 5);
  const auto x = application_features(ds, false, true);
  CHECK(x.rows == ds.application_count());
  CHECK(std::find(x.names.begin(), x.names.end(), "male") == x.names.end());
  CHECK(std::find(x.names.begin(), x.names.end(), "constant") == x.names.end());
  const auto g = application_features(ds, true, false);
  CHECK(std::find(g.names.begin(), g.names.end(), "male") != g.names.end());
  CHECK(std::find(g.names.begin(), g.names.end(), "has_prev") == g.names.end());

  const auto hp = std::find(x.names.begin(), x.names.end(), "has_prev") - x.names.begin();
  std::size_t r = 0;
  for (const auto& h : ds.histories)
    for (std::size_t t = 0; t < h.size(); ++t, ++r) CHECK(x.row(r)[hp] == (t > 0 ? 1.0 : 0.0));
}

TEST_CASE("nearest neighbour imputation") {
  const auto ds = world(400, 9);
  AuditConfig cfg;
  cfg.scenario = ScenarioConfig::for_cell(ScenarioCell::Baseline, table2_preset());
  cfg.seed = 4;
  const auto ts = build_training_set(ds, cfg);
  CHECK(ts.features.rows == ds.application_count());
  CHECK(ts.approved_count + ts.rejected_count == ds.application_count());

  const auto all = application_features(ds, false, true);
  std::vector<int> truth;
  for (const auto& h : ds.histories)
    for (const auto& app : h) truth.push_back(app.outcome == Outcome::Repaid ? 1 : 0);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ts.source.size(); ++i)
    if (!ts.imputed[i]) {
      pool.push_back(ts.source[i]);
      CHECK(ts.labels[i] == truth[ts.source[i]]);
    }
  std::vector<double> mean(all.cols(), 0.0), sd(all.cols(), 0.0);
  for (std::size_t j = 0; j < all.cols(); ++j) {
    for (std::size_t r = 0; r < all.rows; ++r) mean[j] += all.row(r)[j] / all.rows;
    for (std::size_t r = 0; r < all.rows; ++r) sd[j] += std::pow(all.row(r)[j] - mean[j], 2) / all.rows;
    sd[j] = sd[j] > 0 ? std::sqrt(sd[j]) : 1.0;
  }
  std::size_t checked = 0;
  for (std::size_t i = 0; i < ts.source.size() && checked < 40; ++i) {
    if (!ts.imputed[i]) continue;
    double best = INFINITY;
    int label = -1;
    for (std::size_t a : pool) {
      double d = 0.0;
      for (std::size_t j = 0; j < all.cols(); ++j)
        d += std::pow((all.row(ts.source[i])[j] - all.row(a)[j]) / sd[j], 2);
      if (d < best) {
        best = d;
        label = truth[a];
      }
    }
    CHECK(ts.labels[i] == label);
    ++checked;
  }
  CHECK(checked > 0);

  AuditConfig drop = cfg;
  drop.imputation = Imputation::DropRejected;
  const auto td = build_training_set(ds, drop);
  CHECK(td.features.rows == ts.approved_count);

  AuditConfig wide = cfg;
  wide.k_neighbors = 1000000;
  CHECK_FALSE(build_training_set(ds, wide).warnings.empty());
}

TEST_CASE("truth oracle closes the gap") {
  const auto ds = world(2000, 10);
  AuditConfig cfg;
  cfg.scenario = ScenarioConfig::for_cell(ScenarioCell::Baseline, table2_preset());
  const auto rep = machine_report(ds, truth_oracle_scores(ds), cfg, "oracle");
  CHECK(rep.decision_maker == "machine");
  CHECK(*rep.all().tpr_gap == 0.0);
  CHECK(*rep.all().tpr_female == 1.0);
}

TEST_CASE("audit config and full run") {
  const Json j = Json::parse(R"({"scenario": "both0", "learner": "logistic",
      "decision_rule": {"fixed_threshold": 0.7}, "learner_hyperparams": {"n_rounds": 20}})");
  const auto cfg = audit_config_from_json(j, table2_preset());
  CHECK(cfg.scenario.cell() == ScenarioCell::Both0);
  CHECK(cfg.decision_rule == DecisionRuleKind::FixedThreshold);
  CHECK(cfg.fixed_threshold == 0.7);
  CHECK(cfg.hyper.n_rounds == 20);
  CHECK_THROWS_AS(audit_config_from_json(Json::parse(R"({"imputation": "mice"})"), table2_preset()), Error);

  const auto ds = world(1500, 2);
  AuditConfig trees = audit_config_from_json(Json::parse(R"({"learner_hyperparams": {"n_rounds": 20}})"),
                                             table2_preset());
  const auto a = audit(ds, trees);
  const auto b = audit(ds, trees);
  CHECK(dump_json(to_json(a)) == dump_json(to_json(b)));
  CHECK(a.training_rows == ds.application_count());
  CHECK(a.model["type"] == "boosted_trees");
  CHECK(to_json(a)["decision_maker"] == "machine");
}
