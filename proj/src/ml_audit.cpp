#include "biasforge/ml_audit.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "biasforge/error.hpp"
#include "biasforge/parallel.hpp"
#include "biasforge/world_sim.hpp"

namespace biasforge {
namespace {

constexpr std::size_t kChunk = 256;

Imputation parse_imputation(std::string_view s) {
  if (s == "nearest_neighbor") return Imputation::NearestNeighbor;
  if (s == "drop_rejected") return Imputation::DropRejected;
  throw Error(ErrorKind::Config, "unknown imputation '" + std::string(s) + "'");
}

LearnerKind parse_learner(std::string_view s) {
  if (s == "boosted_trees") return LearnerKind::BoostedTrees;
  if (s == "logistic") return LearnerKind::Logistic;
  throw Error(ErrorKind::Config, "unknown learner '" + std::string(s) + "'");
}

// Column means and sds (sd 1 for constant columns).
std::pair<std::vector<double>, std::vector<double>> column_moments(const FeatureMatrix& x) {
  const std::size_t p = x.cols();
  std::vector<double> mean(p, 0.0), sd(p, 1.0);
  if (x.rows == 0) return {mean, sd};
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) s += x.row(r)[j];
    mean[j] = s / static_cast<double>(x.rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x.row(r)[j] - mean[j]) * (x.row(r)[j] - mean[j]);
    const double v = std::sqrt(ss / static_cast<double>(x.rows));
    sd[j] = v > 0.0 ? v : 1.0;
  }
  return {mean, sd};
}

}  // namespace

std::string_view to_string(Imputation m) {
  return m == Imputation::NearestNeighbor ? "nearest_neighbor" : "drop_rejected";
}

std::string_view to_string(LearnerKind k) {
  return k == LearnerKind::BoostedTrees ? "boosted_trees" : "logistic";
}

void AuditConfig::validate() const {
  scenario.base_params.validate();
  if (k_neighbors < 1) throw Error(ErrorKind::Config, "k_neighbors must be >= 1");
  hyper.validate();
  if (decision_rule == DecisionRuleKind::FixedThreshold &&
      !(fixed_threshold >= 0.0 && fixed_threshold <= 1.0))
    throw Error(ErrorKind::Config, "fixed threshold must be in [0, 1]");
}

AuditConfig audit_config_from_json(const Json& j, const ModelParams& base_params) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "audit config must be an object");
  AuditConfig c;
  const ScenarioCell cell =
      parse_scenario(cfg::get_or<std::string>(j, "scenario", "", "baseline"));
  c.scenario = ScenarioConfig::for_cell(cell, base_params);
  c.imputation = parse_imputation(cfg::get_or<std::string>(j, "imputation", "", "nearest_neighbor"));
  c.k_neighbors = cfg::get_or<int>(j, "k_neighbors", "", c.k_neighbors);
  c.learner = parse_learner(cfg::get_or<std::string>(j, "learner", "", "boosted_trees"));
  if (j.contains("learner_hyperparams")) {
    const Json& h = j["learner_hyperparams"];
    const std::string path = "/learner_hyperparams";
    c.hyper.n_rounds = cfg::get_or<int>(h, "n_rounds", path, c.hyper.n_rounds);
    c.hyper.max_depth = cfg::get_or<int>(h, "max_depth", path, c.hyper.max_depth);
    c.hyper.learning_rate = cfg::get_or<double>(h, "learning_rate", path, c.hyper.learning_rate);
    c.hyper.min_leaf = cfg::get_or<int>(h, "min_leaf", path, c.hyper.min_leaf);
  }
  if (j.contains("decision_rule")) {
    const Json& r = j["decision_rule"];
    if (r.is_string() && r.get<std::string>() == "profit_threshold") {
      c.decision_rule = DecisionRuleKind::ProfitThreshold;
    } else if (r.is_object() && r.contains("fixed_threshold")) {
      c.decision_rule = DecisionRuleKind::FixedThreshold;
      c.fixed_threshold = cfg::get<double>(r, "fixed_threshold", "/decision_rule");
    } else {
      throw Error(ErrorKind::Config,
                  "field /decision_rule must be \"profit_threshold\" or {\"fixed_threshold\": x}");
    }
  }
  c.include_gender = cfg::get_or<bool>(j, "include_gender", "", c.include_gender);
  c.include_lagged_signals =
      cfg::get_or<bool>(j, "include_lagged_signals", "", c.include_lagged_signals);
  c.seed = cfg::get_or<std::uint64_t>(j, "seed", "", c.seed);
  c.validate();
  return c;
}

FeatureMatrix application_features(const FullSampleDataset& dataset, bool include_gender,
                                   bool include_lagged_signals) {
  FeatureMatrix x;
  std::vector<std::string> covs;
  if (!dataset.profiles.empty())
    for (const auto& [name, v] : dataset.profiles.front().covariates)
      if (name != "constant") covs.push_back(name);
  x.names = covs;
  if (include_gender) x.names.emplace_back("male");
  x.names.insert(x.names.end(), {"amount", "term_months", "annual_rate", "app_index"});
  if (include_lagged_signals)
    x.names.insert(x.names.end(), {"has_prev", "prev_overdue_days", "prev_overdue_frac",
                                   "prev_attitude_frac", "prev_help_frac"});
  x.rows = dataset.application_count();
  x.values.reserve(x.rows * x.cols());
  for (std::size_t i = 0; i < dataset.applicant_count(); ++i) {
    const ApplicantProfile& prof = dataset.profiles[i];
    const auto& hist = dataset.histories[i];
    for (std::size_t k = 0; k < hist.size(); ++k) {
      for (const auto& name : covs) {
        const auto it = prof.covariates.find(name);
        if (it == prof.covariates.end())
          throw Error(ErrorKind::Data, "applicant " + prof.id + " lacks covariate '" + name + "'");
        x.values.push_back(it->second);
      }
      if (include_gender) x.values.push_back(prof.is_male() ? 1.0 : 0.0);
      x.values.push_back(hist[k].terms.amount);
      x.values.push_back(hist[k].terms.term_months);
      x.values.push_back(hist[k].terms.annual_rate);
      x.values.push_back(static_cast<double>(k + 1));
      if (include_lagged_signals) {
        const bool prev = k > 0;
        x.values.push_back(prev ? 1.0 : 0.0);
        for (SignalKind s : kAllSignals)
          x.values.push_back(prev ? hist[k - 1].signals.value(s) : 0.0);
      }
    }
  }
  return x;
}

TrainingSet build_training_set(const FullSampleDataset& dataset, const AuditConfig& config) {
  config.validate();
  const auto records = simulate_decisions(dataset, apply_scenario(config.scenario),
                                          DecisionMode::SampleDecisions, config.seed);
  const FeatureMatrix all =
      application_features(dataset, config.include_gender, config.include_lagged_signals);
  std::vector<std::size_t> pool, rejected;
  for (std::size_t r = 0; r < records.size(); ++r) (*records[r].approved ? pool : rejected).push_back(r);
  if (pool.empty()) throw Error(ErrorKind::Degenerate, "no approved applications to learn from");

  TrainingSet ts;
  ts.approved_count = pool.size();
  ts.rejected_count = rejected.size();
  ts.features.names = all.names;
  const std::size_t p = all.cols();
  auto label_of = [&](std::size_t r) { return records[r].outcome == Outcome::Repaid ? 1 : 0; };

  std::vector<int> imputed_labels(rejected.size(), 0);
  if (config.imputation == Imputation::NearestNeighbor && !rejected.empty()) {
    std::size_t k = static_cast<std::size_t>(config.k_neighbors);
    if (k > pool.size()) {
      ts.warnings.push_back("k_neighbors " + std::to_string(k) + " exceeds the approved pool; using " +
                            std::to_string(pool.size()));
      k = pool.size();
    }
    const auto [mean, sd] = column_moments(all);
    std::vector<double> zpool(pool.size() * p);
    for (std::size_t a = 0; a < pool.size(); ++a)
      for (std::size_t j = 0; j < p; ++j)
        zpool[a * p + j] = (all.row(pool[a])[j] - mean[j]) / sd[j];
    parallel_chunks(rejected.size(), kChunk, [&](std::size_t begin, std::size_t end) {
      std::vector<double> q(p);
      std::vector<std::pair<double, std::size_t>> best;
      for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < p; ++j) q[j] = (all.row(rejected[i])[j] - mean[j]) / sd[j];
        best.clear();
        for (std::size_t a = 0; a < pool.size(); ++a) {
          double d = 0.0;
          const double* z = zpool.data() + a * p;
          for (std::size_t j = 0; j < p; ++j) d += (q[j] - z[j]) * (q[j] - z[j]);
          if (best.size() == k && d >= best.back().first) continue;
          // Equal distances keep the earlier pool row ahead.
          auto pos = std::upper_bound(best.begin(), best.end(), d,
                                      [](double v, const auto& e) { return v < e.first; });
          best.insert(pos, {d, a});
          if (best.size() > k) best.pop_back();
        }
        std::size_t ones = 0;
        for (const auto& [d, a] : best) ones += static_cast<std::size_t>(label_of(pool[a]));
        const std::size_t zeros = best.size() - ones;
        imputed_labels[i] = ones > zeros ? 1 : ones < zeros ? 0 : label_of(pool[best.front().second]);
      }
    });
  }

  std::size_t next_rej = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const bool approved = *records[r].approved;
    int label = 0;
    if (approved) {
      label = label_of(r);
    } else {
      const std::size_t idx = next_rej++;
      if (config.imputation == Imputation::DropRejected) continue;
      label = imputed_labels[idx];
    }
    ts.features.values.insert(ts.features.values.end(), all.row(r), all.row(r) + p);
    ++ts.features.rows;
    ts.labels.push_back(label);
    ts.imputed.push_back(!approved);
    ts.source.push_back(r);
  }
  return ts;
}

std::unique_ptr<Scorer> train_learner(const TrainingSet& train, const AuditConfig& config) {
  if (config.learner == LearnerKind::Logistic)
    return std::make_unique<LogisticModel>(LogisticModel::train(train.features, train.labels));
  return std::make_unique<BoostedTrees>(
      BoostedTrees::train(train.features, train.labels, config.hyper, config.seed));
}

std::vector<double> truth_oracle_scores(const FullSampleDataset& dataset) {
  std::vector<double> scores;
  scores.reserve(dataset.application_count());
  for (const auto& hist : dataset.histories)
    for (const Application& app : hist) scores.push_back(app.outcome == Outcome::Repaid ? 1.0 : 0.0);
  return scores;
}

ScenarioReport machine_report(const FullSampleDataset& dataset, std::span<const double> scores,
                              const AuditConfig& config, std::string scenario) {
  if (scores.size() != dataset.application_count())
    throw Error(ErrorKind::Data, "score count does not match the applications");
  std::vector<DecisionRecord> records;
  records.reserve(scores.size());
  std::size_t r = 0;
  for (std::size_t i = 0; i < dataset.applicant_count(); ++i) {
    const auto& hist = dataset.histories[i];
    for (std::size_t k = 0; k < hist.size(); ++k, ++r) {
      const LoanTerms& terms = hist[k].terms;
      const double threshold =
          config.decision_rule == DecisionRuleKind::ProfitThreshold
              ? terms.loss_if_default / (terms.gain_if_repaid + terms.loss_if_default)
              : config.fixed_threshold;
      DecisionRecord rec;
      rec.applicant = i;
      rec.t = static_cast<int>(k + 1);
      rec.gender = dataset.profiles[i].gender;
      rec.non_default_prob = scores[r];
      rec.approved = scores[r] > threshold;
      rec.approval_prob = *rec.approved ? 1.0 : 0.0;
      rec.outcome = hist[k].outcome;
      rec.realized_profit = hist[k].realized_profit;
      records.push_back(rec);
    }
  }
  return make_report(records, std::move(scenario), "machine", config.scenario.segments,
                     TprConvention::Expected);
}

AuditResult audit(const FullSampleDataset& dataset, const AuditConfig& config) {
  const TrainingSet train = build_training_set(dataset, config);
  const auto scorer = train_learner(train, config);
  const FeatureMatrix all =
      application_features(dataset, config.include_gender, config.include_lagged_signals);
  std::vector<double> scores(all.rows);
  parallel_chunks(all.rows, kChunk, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) scores[r] = scorer->predict(all.row(r));
  });
  AuditResult result;
  result.report =
      machine_report(dataset, scores, config, std::string(to_string(config.scenario.cell())));
  result.model = scorer->to_json();
  result.training_rows = train.features.rows;
  result.imputed_rows = 0;
  for (bool b : train.imputed) result.imputed_rows += b;
  result.warnings = train.warnings;
  return result;
}

Json to_json(const AuditResult& result) {
  Json j = to_json(result.report);
  j["training_rows"] = result.training_rows;
  j["imputed_rows"] = result.imputed_rows;
  j["warnings"] = result.warnings;
  return j;
}

}  // namespace biasforge
