#include "biasforge/dataset.hpp"

#include <cmath>
#include <string>

#include "biasforge/error.hpp"

namespace biasforge {

std::string_view to_string(Outcome o) { return o == Outcome::Repaid ? "repaid" : "defaulted"; }

Outcome parse_outcome(std::string_view text) {
  if (text == "repaid") return Outcome::Repaid;
  if (text == "defaulted") return Outcome::Defaulted;
  throw Error(ErrorKind::Data, "unknown outcome '" + std::string(text) + "'");
}

std::size_t FullSampleDataset::application_count() const noexcept {
  std::size_t n = 0;
  for (const auto& h : histories) n += h.size();
  return n;
}

void FullSampleDataset::validate() const {
  if (profiles.size() != histories.size())
    throw Error(ErrorKind::Data, "profile and history counts differ");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].validate();
    if (histories[i].empty())
      throw Error(ErrorKind::Data, "applicant " + profiles[i].id + " has an empty history");
    for (std::size_t k = 0; k < histories[i].size(); ++k) {
      const Application& app = histories[i][k];
      app.terms.validate();
      app.signals.validate();
      const double expected = app.outcome == Outcome::Repaid ? app.terms.gain_if_repaid
                                                             : -app.terms.loss_if_default;
      if (std::abs(app.realized_profit - expected) > 1e-9 * (1.0 + std::abs(expected)))
        throw Error(ErrorKind::Data, "applicant " + profiles[i].id + " t=" +
                                         std::to_string(k + 1) +
                                         ": realized profit inconsistent with outcome");
      if (app.outcome == Outcome::Defaulted && k + 1 != histories[i].size())
        throw Error(ErrorKind::Data,
                    "applicant " + profiles[i].id + " continues after a defaulted loan");
    }
  }
}

std::size_t DecisionLog::application_count() const noexcept {
  std::size_t n = 0;
  for (const auto& h : histories) n += h.size();
  return n;
}

DecisionLog make_decision_log(const FullSampleDataset& dataset,
                              const std::vector<DecisionRecord>& records) {
  if (records.size() != dataset.application_count())
    throw Error(ErrorKind::Data, "decision records do not cover the dataset");
  DecisionLog log;
  log.profiles = dataset.profiles;
  log.histories.resize(dataset.applicant_count());
  std::size_t r = 0;
  for (std::size_t i = 0; i < dataset.applicant_count(); ++i) {
    for (const Application& app : dataset.histories[i]) {
      const DecisionRecord& rec = records[r++];
      if (!rec.approved)
        throw Error(ErrorKind::Data, "decision log needs sampled decisions");
      LoggedApplication la;
      la.terms = app.terms;
      la.approved = *rec.approved;
      if (la.approved) la.signals = app.signals;
      log.histories[i].push_back(la);
    }
  }
  return log;
}

}  // namespace biasforge
