#include "biasforge/counterfactual.hpp"

#include "biasforge/dataset_io.hpp"
#include "biasforge/error.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/world_sim.hpp"

namespace biasforge {

std::string_view to_string(ScenarioCell cell) {
  switch (cell) {
    case ScenarioCell::Baseline: return "baseline";
    case ScenarioCell::Pref0: return "pref0";
    case ScenarioCell::Belief0: return "belief0";
    case ScenarioCell::Both0: return "both0";
  }
  return "?";
}

ScenarioCell parse_scenario(std::string_view token) {
  for (ScenarioCell c : kScenarioGrid)
    if (to_string(c) == token) return c;
  throw Error(ErrorKind::Config, "unknown scenario '" + std::string(token) +
                                     "' (expected baseline, pref0, belief0, both0 or grid)");
}

ScenarioConfig ScenarioConfig::for_cell(ScenarioCell cell, const ModelParams& base) {
  ScenarioConfig c;
  c.base_params = base;
  c.zero_pref_bias = cell == ScenarioCell::Pref0 || cell == ScenarioCell::Both0;
  c.zero_belief_bias = cell == ScenarioCell::Belief0 || cell == ScenarioCell::Both0;
  return c;
}

ScenarioCell ScenarioConfig::cell() const noexcept {
  if (zero_pref_bias && zero_belief_bias) return ScenarioCell::Both0;
  if (zero_pref_bias) return ScenarioCell::Pref0;
  if (zero_belief_bias) return ScenarioCell::Belief0;
  return ScenarioCell::Baseline;
}

ModelParams apply_scenario(const ScenarioConfig& config) {
  ModelParams p = config.base_params;
  if (config.zero_pref_bias) p.c_male = 0.0;
  if (config.zero_belief_bias) p.beta_male = 0.0;
  return p;
}

ScenarioReport make_report(std::span<const DecisionRecord> records, std::string scenario,
                           std::string decision_maker, const std::vector<Segment>& segments,
                           TprConvention convention) {
  ScenarioReport report;
  report.scenario = std::move(scenario);
  report.decision_maker = std::move(decision_maker);
  report.convention = convention;
  report.segments[Segment::All] = segment_metrics(records, Segment::All, convention);
  for (Segment s : segments)
    if (s != Segment::All) report.segments[s] = segment_metrics(records, s, convention);
  return report;
}

std::vector<DecisionRecord> scenario_records(const FullSampleDataset& dataset,
                                             const ScenarioConfig& config) {
  if (dataset.histories.size() != dataset.profiles.size())
    throw Error(ErrorKind::Data, "dataset is missing histories");
  auto records = simulate_decisions(dataset, apply_scenario(config),
                                    DecisionMode::KeepProbabilities, config.seed);
  if (config.convention == TprConvention::Sampled) {
    for (DecisionRecord& r : records) {
      StreamRng rng(config.seed, r.applicant, static_cast<std::uint64_t>(r.t),
                    StreamTag::Decision);
      r.approved = rng.uniform() < r.approval_prob;
    }
  }
  return records;
}

ScenarioReport run_scenario(const FullSampleDataset& dataset, const ScenarioConfig& config) {
  const auto records = scenario_records(dataset, config);
  return make_report(records, std::string(to_string(config.cell())), "human", config.segments,
                     config.convention);
}

std::map<ScenarioCell, ScenarioReport> scenario_grid(const FullSampleDataset& dataset,
                                                     const ModelParams& base_params,
                                                     TprConvention convention) {
  std::map<ScenarioCell, ScenarioReport> grid;
  for (ScenarioCell cell : kScenarioGrid) {
    ScenarioConfig cfg = ScenarioConfig::for_cell(cell, base_params);
    cfg.convention = convention;
    grid.emplace(cell, run_scenario(dataset, cfg));
  }
  return grid;
}

Json to_json(const ScenarioReport& report) {
  Json j = to_json(report.all());
  j["scenario"] = report.scenario;
  j["decision_maker"] = report.decision_maker;
  j["tpr_convention"] = report.convention == TprConvention::Expected ? "expected" : "sampled";
  Json segs = Json::object();
  for (const auto& [seg, m] : report.segments) segs[std::string(to_string(seg))] = to_json(m);
  j["segments"] = segs;
  return j;
}

Json grid_to_json(const std::map<ScenarioCell, ScenarioReport>& grid) {
  Json j = Json::object();
  for (const auto& [cell, report] : grid) j[std::string(to_string(cell))] = to_json(report);
  return j;
}

std::string reports_csv(const std::vector<ScenarioReport>& reports) {
  std::string out =
      "scenario,segment,decision_maker,n_applications,n_female,n_male,expected_profit,"
      "expected_profit_se,tpr_female,tpr_male,tpr_gap,tpr_gap_se,approval_rate_female,"
      "approval_rate_male\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const ScenarioReport& r : reports) {
    for (const auto& [seg, m] : r.segments) {
      out += csv_escape(r.scenario) + ',' + std::string(to_string(seg)) + ',' +
             csv_escape(r.decision_maker) + ',' + std::to_string(m.n_applications) + ',' +
             std::to_string(m.n_female) + ',' + std::to_string(m.n_male) + ',' +
             format_number(m.expected_profit) + ',' + format_number(m.expected_profit_se) + ',' +
             opt(m.tpr_female) + ',' + opt(m.tpr_male) + ',' + opt(m.tpr_gap) + ',' +
             opt(m.tpr_gap_se) + ',' + opt(m.approval_rate_female) + ',' +
             opt(m.approval_rate_male) + '\n';
    }
  }
  return out;
}

}  // namespace biasforge
