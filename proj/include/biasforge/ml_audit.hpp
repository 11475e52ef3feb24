#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "biasforge/boosting.hpp"
#include "biasforge/counterfactual.hpp"
#include "biasforge/dataset.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {

enum class Imputation { NearestNeighbor, DropRejected };
enum class LearnerKind { BoostedTrees, Logistic };
enum class DecisionRuleKind { ProfitThreshold, FixedThreshold };

std::string_view to_string(Imputation m);
std::string_view to_string(LearnerKind k);

struct AuditConfig {
  ScenarioConfig scenario;
  Imputation imputation = Imputation::NearestNeighbor;
  int k_neighbors = 1;
  LearnerKind learner = LearnerKind::BoostedTrees;
  BoostingParams hyper;
  DecisionRuleKind decision_rule = DecisionRuleKind::ProfitThreshold;
  double fixed_threshold = 0.5;
  bool include_gender = false;
  bool include_lagged_signals = true;
  std::uint64_t seed = 1;  // human decision draws of the training world

  void validate() const;
};

// Fields: scenario (token, default baseline), imputation
// ("nearest_neighbor" | "drop_rejected"), k_neighbors, learner
// ("boosted_trees" | "logistic"), learner_hyperparams {n_rounds, max_depth,
// learning_rate, min_leaf}, decision_rule ("profit_threshold" or
// {"fixed_threshold": theta}), include_gender, include_lagged_signals, seed.
// base_params supplies the evaluator.
AuditConfig audit_config_from_json(const Json& j, const ModelParams& base_params);

// Feature vector of every application of the full sample, in dataset order:
// covariates, loan terms, application index, and (for t > 1) the previous
// loan's signals with a has_prev flag.
FeatureMatrix application_features(const FullSampleDataset& dataset, bool include_gender,
                                   bool include_lagged_signals);

struct TrainingSet {
  FeatureMatrix features;
  std::vector<int> labels;  // 1 repaid, 0 defaulted
  std::vector<bool> imputed;
  std::vector<std::size_t> source;  // row index into the full sample's applications
  std::size_t approved_count = 0;
  std::size_t rejected_count = 0;
  std::vector<std::string> warnings;
};

// Human decisions under the scenario, sampled with config.seed. Approved rows
// keep their outcome; rejected rows take the majority label of their k
// nearest approved rows (Euclidean on z-scored features, ties to the nearer
// row) or are dropped.
TrainingSet build_training_set(const FullSampleDataset& dataset, const AuditConfig& config);

std::unique_ptr<Scorer> train_learner(const TrainingSet& train, const AuditConfig& config);

// p = 1 for repaid applications and 0 for defaults.
std::vector<double> truth_oracle_scores(const FullSampleDataset& dataset);

// Machine decisions over every application of the full sample from given
// scores: approve iff score > b / (a + b) (profit threshold) or > theta.
ScenarioReport machine_report(const FullSampleDataset& dataset, std::span<const double> scores,
                              const AuditConfig& config, std::string scenario);

struct AuditResult {
  ScenarioReport report;
  Json model;
  std::size_t training_rows = 0;
  std::size_t imputed_rows = 0;
  std::vector<std::string> warnings;
};

AuditResult audit(const FullSampleDataset& dataset, const AuditConfig& config);

Json to_json(const AuditResult& result);

}  // namespace biasforge
