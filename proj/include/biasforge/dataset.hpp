#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "biasforge/core_model.hpp"

namespace biasforge {

enum class Outcome { Repaid, Defaulted };

std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view text);

// One granted loan of the full-sample experiment.
struct Application {
  LoanTerms terms;
  RepaymentSignals signals;
  Outcome outcome = Outcome::Repaid;
  double realized_profit = 0.0;  // a if repaid, -b if defaulted
};

// Every application approved, every outcome observed. Applicant index i owns
// profiles[i] and histories[i]; histories[i][k] is application t = k + 1.
struct FullSampleDataset {
  std::vector<ApplicantProfile> profiles;
  std::vector<std::vector<Application>> histories;
  // Latent quality per applicant; empty when loaded from files.
  std::vector<double> true_quality;

  std::size_t applicant_count() const noexcept { return profiles.size(); }
  std::size_t application_count() const noexcept;
  void validate() const;
};

enum class DecisionMode { SampleDecisions, KeepProbabilities };

struct DecisionRecord {
  std::size_t applicant = 0;
  int t = 1;
  Gender gender = Gender::Female;
  double belief_mean = 0.0;
  double belief_variance = 0.0;
  double non_default_prob = 0.0;
  double approval_prob = 0.0;
  std::optional<bool> approved;  // drawn decision, SampleDecisions mode only
  bool updated_from_signals = false;
  Outcome outcome = Outcome::Repaid;  // full-sample truth
  double realized_profit = 0.0;

  bool operator==(const DecisionRecord&) const = default;
};

// Observational log: what an estimator sees. Signals exist only for approved
// applications.
struct LoggedApplication {
  LoanTerms terms;
  bool approved = false;
  std::optional<RepaymentSignals> signals;
};

struct DecisionLog {
  std::vector<ApplicantProfile> profiles;
  std::vector<std::vector<LoggedApplication>> histories;

  std::size_t application_count() const noexcept;
};

// Builds the observational log from a full sample and sampled decisions.
DecisionLog make_decision_log(const FullSampleDataset& dataset,
                              const std::vector<DecisionRecord>& records);

}  // namespace biasforge
