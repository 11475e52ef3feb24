#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "biasforge/core_model.hpp"
#include "biasforge/dataset.hpp"
#include "biasforge/fairness.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {

enum class ScenarioCell { Baseline, Pref0, Belief0, Both0 };
inline constexpr std::array<ScenarioCell, 4> kScenarioGrid{
    ScenarioCell::Baseline, ScenarioCell::Pref0, ScenarioCell::Belief0, ScenarioCell::Both0};

std::string_view to_string(ScenarioCell cell);
ScenarioCell parse_scenario(std::string_view token);  // Config error on unknown token

struct ScenarioConfig {
  bool zero_pref_bias = false;    // c_male := 0
  bool zero_belief_bias = false;  // beta_male := 0
  ModelParams base_params;
  std::vector<Segment> segments{Segment::All, Segment::NewOnly, Segment::RepeatedOnly};
  TprConvention convention = TprConvention::Expected;
  std::uint64_t seed = 0;  // draws for the sampled convention

  static ScenarioConfig for_cell(ScenarioCell cell, const ModelParams& base);
  ScenarioCell cell() const noexcept;
};

// base_params with exactly the flagged fields zeroed.
ModelParams apply_scenario(const ScenarioConfig& config);

struct ScenarioReport {
  std::string scenario;
  std::string decision_maker = "human";
  TprConvention convention = TprConvention::Expected;
  std::map<Segment, SegmentMetrics> segments;  // always holds All

  const SegmentMetrics& all() const { return segments.at(Segment::All); }
};

ScenarioReport make_report(std::span<const DecisionRecord> records, std::string scenario,
                           std::string decision_maker, const std::vector<Segment>& segments,
                           TprConvention convention);

// Every application of the full sample scored under the scenario's parameters.
std::vector<DecisionRecord> scenario_records(const FullSampleDataset& dataset,
                                             const ScenarioConfig& config);

ScenarioReport run_scenario(const FullSampleDataset& dataset, const ScenarioConfig& config);

std::map<ScenarioCell, ScenarioReport> scenario_grid(const FullSampleDataset& dataset,
                                                     const ModelParams& base_params,
                                                     TprConvention convention =
                                                         TprConvention::Expected);

Json to_json(const ScenarioReport& report);
Json grid_to_json(const std::map<ScenarioCell, ScenarioReport>& grid);

// One row per scenario x segment.
std::string reports_csv(const std::vector<ScenarioReport>& reports);

}  // namespace biasforge
