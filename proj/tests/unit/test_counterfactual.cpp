#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biasforge/counterfactual.hpp"
#include "biasforge/error.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

using namespace biasforge;

namespace {

FullSampleDataset world(std::size_t n, std::uint64_t seed) {
  WorldConfig w = default_world_config();
  w.n_applicants = n;
  w.seed = seed;
  return simulate_full_sample(w);
}

}  // namespace

TEST_CASE("scenario tokens") {
  for (ScenarioCell c : kScenarioGrid) CHECK(parse_scenario(to_string(c)) == c);
  try {
    parse_scenario("both1");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("scenario zeroes exactly the flagged fields") {
  const ModelParams base = table2_preset();
  for (ScenarioCell c : kScenarioGrid) {
    const auto cfg = ScenarioConfig::for_cell(c, base);
    CHECK(cfg.cell() == c);
    const ModelParams p = apply_scenario(cfg);
    CHECK(p.c_male == (cfg.zero_pref_bias ? 0.0 : base.c_male));
    CHECK(p.beta_male == (cfg.zero_belief_bias ? 0.0 : base.beta_male));
    ModelParams rest = p;
    rest.c_male = base.c_male;
    rest.beta_male = base.beta_male;
    CHECK(rest == base);
  }
}

TEST_CASE("scenario grid") {
  const auto ds = world(3000, 4);
  const ModelParams p = table2_preset();
  const auto grid = scenario_grid(ds, p);
  const Json j = grid_to_json(grid);
  CHECK(j.size() == 4);
  for (const char* key : {"baseline", "pref0", "belief0", "both0"}) CHECK(j.contains(key));

  const auto single = run_scenario(ds, ScenarioConfig::for_cell(ScenarioCell::Baseline, p));
  CHECK(dump_json(to_json(single)) == dump_json(j["baseline"]));
  CHECK(j["baseline"]["decision_maker"] == "human");
  CHECK(j["baseline"]["segments"].contains("new"));

  // Removing the preference penalty on men lowers the female-minus-male gap.
  CHECK(*grid.at(ScenarioCell::Baseline).all().tpr_gap > *grid.at(ScenarioCell::Pref0).all().tpr_gap);

  std::vector<ScenarioReport> reports;
  for (const auto& [c, r] : grid) reports.push_back(r);
  const std::string csv = reports_csv(reports);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 3);
}

TEST_CASE("expected records keep every earlier loan") {
  const auto ds = world(500, 8);
  const auto records = scenario_records(ds, ScenarioConfig::for_cell(ScenarioCell::Both0, table2_preset()));
  CHECK(records.size() == ds.application_count());
  for (const auto& r : records) {
    CHECK_FALSE(r.approved.has_value());
    CHECK(r.updated_from_signals == (r.t > 1));
  }
}

TEST_CASE("sampled convention") {
  const auto ds = world(2000, 6);
  ScenarioConfig cfg = ScenarioConfig::for_cell(ScenarioCell::Baseline, table2_preset());
  cfg.convention = TprConvention::Sampled;
  cfg.seed = 77;
  const auto a = run_scenario(ds, cfg);
  const auto b = run_scenario(ds, cfg);
  CHECK(dump_json(to_json(a)) == dump_json(to_json(b)));
  CHECK(to_json(a)["tpr_convention"] == "sampled");
  const auto records = scenario_records(ds, cfg);
  for (const auto& r : records) CHECK(r.approved.has_value());
}

TEST_CASE("unbiased evaluator is gender blind") {
  const auto ds = world(2000, 12);
  ModelParams p = table2_preset();
  p.c_male = 0.0;
  p.beta_male = 0.0;
  const auto records = scenario_records(ds, ScenarioConfig::for_cell(ScenarioCell::Baseline, p));
  FullSampleDataset swapped = ds;
  for (auto& prof : swapped.profiles)
    prof.gender = prof.gender == Gender::Male ? Gender::Female : Gender::Male;
  const auto other = scenario_records(swapped, ScenarioConfig::for_cell(ScenarioCell::Baseline, p));
  REQUIRE(records.size() == other.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    CHECK(records[k].approval_prob == other[k].approval_prob);
    CHECK(records[k].belief_mean == other[k].belief_mean);
  }
}
