#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biasforge/core_model.hpp"
#include "biasforge/dataset.hpp"
#include "biasforge/json_io.hpp"
#include "biasforge/rng.hpp"

namespace biasforge {

// Sampling spec for one scalar.
struct Distribution {
  enum class Kind { Constant, Bernoulli, Categorical, Uniform, UniformInt, Normal };

  Kind kind = Kind::Constant;
  double a = 0.0;  // constant value, p, lower bound, or mean
  double b = 0.0;  // upper bound or sd
  std::vector<double> values;
  std::vector<double> probs;
  std::optional<double> min;  // clamp applied after drawing
  std::optional<double> max;

  static Distribution constant(double v);
  static Distribution bernoulli(double p);
  static Distribution categorical(std::vector<double> values, std::vector<double> probs);
  static Distribution uniform(double lo, double hi);
  static Distribution uniform_int(int lo, int hi);
  static Distribution normal(double mean, double sd, std::optional<double> min = std::nullopt,
                             std::optional<double> max = std::nullopt);

  double sample(StreamRng& rng) const;
  void validate(const std::string& path) const;
  Json to_json() const;
  static Distribution from_json(const Json& j, const std::string& path);
};

struct WorldConfig {
  std::size_t n_applicants = 1000;
  int max_applications = 8;
  double female_share = 0.19;
  std::vector<std::pair<std::string, Distribution>> covariates;
  std::vector<Coefficient> true_beta;  // over "constant" and covariate names
  double true_gamma_male = 0.0;
  double true_quality_sd = 0.6;
  // Signal generation: mean = intercept + slope * quality on the transformed
  // scale; weights are ignored here.
  std::map<SignalKind, SignalMap> signal_maps;
  std::map<SignalKind, double> signal_noise_sd;
  double reapply_after_repaid = 0.6;  // defaulters never reapply
  Distribution amount;
  Distribution term_months;
  Distribution annual_rate;
  std::uint64_t seed = 42;

  void validate() const;
};

// Covariates loosely calibrated to the platform's applicant moments; evaluator
// signal maps reused as the world's signal generator; high true repayment.
WorldConfig default_world_config();

// "n_applicants" and "seed" are required; everything else falls back to the
// defaults above. Errors name the offending field path.
WorldConfig world_config_from_json(const Json& j);
Json world_config_to_json(const WorldConfig& config);

struct PopulationMember {
  ApplicantProfile profile;
  double true_quality = 0.0;
};

std::vector<PopulationMember> generate_population(const WorldConfig& config);

LoanTerms generate_terms(const WorldConfig& config, StreamRng& rng);
RepaymentSignals generate_signals(double true_quality, const WorldConfig& config, StreamRng& rng);
Outcome generate_outcome(double true_quality, StreamRng& rng);

FullSampleDataset simulate_full_sample(const WorldConfig& config);

// Replays each history through the evaluator. SampleDecisions draws each
// decision and withholds signals of rejected applications; KeepProbabilities
// treats every earlier loan as granted and only records probabilities.
std::vector<DecisionRecord> simulate_decisions(const FullSampleDataset& dataset,
                                               const ModelParams& params, DecisionMode mode,
                                               std::uint64_t seed);

}  // namespace biasforge
