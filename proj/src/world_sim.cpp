#include "biasforge/world_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biasforge/error.hpp"
#include "biasforge/parallel.hpp"

namespace biasforge {
namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

double clamp_opt(double v, const std::optional<double>& lo, const std::optional<double>& hi) {
  if (lo && v < *lo) v = *lo;
  if (hi && v > *hi) v = *hi;
  return v;
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

constexpr std::size_t kApplicantChunk = 256;

}  // namespace

Distribution Distribution::constant(double v) {
  Distribution d;
  d.kind = Kind::Constant;
  d.a = v;
  return d;
}

Distribution Distribution::bernoulli(double p) {
  Distribution d;
  d.kind = Kind::Bernoulli;
  d.a = p;
  return d;
}

Distribution Distribution::categorical(std::vector<double> values, std::vector<double> probs) {
  Distribution d;
  d.kind = Kind::Categorical;
  d.values = std::move(values);
  d.probs = std::move(probs);
  return d;
}

Distribution Distribution::uniform(double lo, double hi) {
  Distribution d;
  d.kind = Kind::Uniform;
  d.a = lo;
  d.b = hi;
  return d;
}

Distribution Distribution::uniform_int(int lo, int hi) {
  Distribution d;
  d.kind = Kind::UniformInt;
  d.a = lo;
  d.b = hi;
  return d;
}

Distribution Distribution::normal(double mean, double sd, std::optional<double> min,
                                  std::optional<double> max) {
  Distribution d;
  d.kind = Kind::Normal;
  d.a = mean;
  d.b = sd;
  d.min = min;
  d.max = max;
  return d;
}

double Distribution::sample(StreamRng& rng) const {
  double v = 0.0;
  switch (kind) {
    case Kind::Constant: v = a; break;
    case Kind::Bernoulli: v = rng.bernoulli(a) ? 1.0 : 0.0; break;
    case Kind::Categorical: {
      const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
      const double u = rng.uniform() * total;
      double acc = 0.0;
      v = values.back();
      for (std::size_t k = 0; k < values.size(); ++k) {
        acc += probs[k];
        if (u < acc) {
          v = values[k];
          break;
        }
      }
      break;
    }
    case Kind::Uniform: v = a + (b - a) * rng.uniform(); break;
    case Kind::UniformInt: {
      const auto span = static_cast<std::uint64_t>(b - a + 1.0);
      v = a + static_cast<double>(rng() % span);
      break;
    }
    case Kind::Normal: v = a + b * rng.normal(); break;
  }
  return clamp_opt(v, min, max);
}

void Distribution::validate(const std::string& path) const {
  switch (kind) {
    case Kind::Constant:
      if (!std::isfinite(a)) config_error("field " + path + "/value must be finite");
      break;
    case Kind::Bernoulli:
      if (!is_probability(a)) config_error("field " + path + "/p must lie in [0,1]");
      break;
    case Kind::Categorical: {
      if (values.empty() || values.size() != probs.size())
        config_error("field " + path + ": values and probs must be non-empty and equal length");
      double total = 0.0;
      for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0) config_error("field " + path + "/probs must be >= 0");
        total += p;
      }
      if (!(total > 0.0)) config_error("field " + path + "/probs must not all be zero");
      break;
    }
    case Kind::Uniform:
    case Kind::UniformInt:
      if (!(b >= a)) config_error("field " + path + ": high must be >= low");
      break;
    case Kind::Normal:
      if (!(b >= 0.0)) config_error("field " + path + "/sd must be >= 0");
      break;
  }
  if (min && max && *min > *max) config_error("field " + path + ": min must be <= max");
}

Json Distribution::to_json() const {
  Json j;
  switch (kind) {
    case Kind::Constant: j = {{"type", "constant"}, {"value", a}}; break;
    case Kind::Bernoulli: j = {{"type", "bernoulli"}, {"p", a}}; break;
    case Kind::Categorical: j = {{"type", "categorical"}, {"values", values}, {"probs", probs}}; break;
    case Kind::Uniform: j = {{"type", "uniform"}, {"low", a}, {"high", b}}; break;
    case Kind::UniformInt:
      j = {{"type", "uniform_int"}, {"low", static_cast<int>(a)}, {"high", static_cast<int>(b)}};
      break;
    case Kind::Normal: j = {{"type", "normal"}, {"mean", a}, {"sd", b}}; break;
  }
  if (min) j["min"] = *min;
  if (max) j["max"] = *max;
  return j;
}

Distribution Distribution::from_json(const Json& j, const std::string& path) {
  const auto type = cfg::get<std::string>(j, "type", path);
  Distribution d;
  if (type == "constant") {
    d = constant(cfg::get<double>(j, "value", path));
  } else if (type == "bernoulli") {
    d = bernoulli(cfg::get<double>(j, "p", path));
  } else if (type == "categorical") {
    d = categorical(cfg::get<std::vector<double>>(j, "values", path),
                    cfg::get<std::vector<double>>(j, "probs", path));
  } else if (type == "uniform") {
    d = uniform(cfg::get<double>(j, "low", path), cfg::get<double>(j, "high", path));
  } else if (type == "uniform_int") {
    d = uniform_int(cfg::get<int>(j, "low", path), cfg::get<int>(j, "high", path));
  } else if (type == "normal") {
    d = normal(cfg::get<double>(j, "mean", path), cfg::get<double>(j, "sd", path));
  } else {
    config_error("field " + path + "/type: unknown distribution '" + type + "'");
  }
  if (j.contains("min")) d.min = cfg::get<double>(j, "min", path);
  if (j.contains("max")) d.max = cfg::get<double>(j, "max", path);
  d.validate(path);
  return d;
}

void WorldConfig::validate() const {
  if (n_applicants < 1) config_error("field /n_applicants must be >= 1");
  if (max_applications < 1) config_error("field /max_applications must be >= 1");
  if (!is_probability(female_share)) config_error("field /female_share must lie in [0,1]");
  if (!is_probability(reapply_after_repaid))
    config_error("field /reapplication/after_repaid must lie in [0,1]");
  if (!(true_quality_sd > 0.0) || !std::isfinite(true_quality_sd))
    config_error("field /true_quality_sd must be > 0");
  if (!std::isfinite(true_gamma_male)) config_error("field /true_gamma_male must be finite");
  for (const auto& [name, dist] : covariates) {
    if (name == "constant") config_error("field /covariates/constant is reserved");
    dist.validate("/covariates/" + name);
  }
  for (const auto& c : true_beta) {
    const bool known =
        c.name == "constant" ||
        std::any_of(covariates.begin(), covariates.end(),
                    [&](const auto& cov) { return cov.first == c.name; });
    if (!known) config_error("field /true_beta/" + c.name + " names no covariate");
    if (!std::isfinite(c.value)) config_error("field /true_beta/" + c.name + " must be finite");
  }
  for (const auto& [kind, m] : signal_maps)
    if (!std::isfinite(m.slope) || !std::isfinite(m.intercept))
      config_error("field /signal_maps/" + std::string(to_string(kind)) + " must be finite");
  for (const auto& [kind, sd] : signal_noise_sd)
    if (!(sd >= 0.0))
      config_error("field /signal_noise_sd/" + std::string(to_string(kind)) + " must be >= 0");
  amount.validate("/terms/amount");
  term_months.validate("/terms/term_months");
  annual_rate.validate("/terms/annual_rate");
}

WorldConfig default_world_config() {
  WorldConfig c;
  c.covariates = {
      {"dpi", Distribution::normal(2.4, 1.4, 0.3, 8.0)},
      {"education", Distribution::categorical({1, 2, 3, 4}, {0.08, 0.62, 0.27, 0.03})},
      {"first_app_month", Distribution::uniform_int(0, 32)},
      {"housing", Distribution::bernoulli(0.17)},
      {"income", Distribution::categorical({1, 2, 3, 4, 5, 6, 7},
                                           {0.12, 0.20, 0.22, 0.20, 0.13, 0.08, 0.05})},
  };
  c.true_beta = {{"constant", 2.6}, {"dpi", 0.05}, {"education", 0.25},
                 {"first_app_month", 0.0}, {"housing", 0.2}, {"income", 0.1}};
  c.true_gamma_male = 0.0;
  c.true_quality_sd = 0.6;
  c.signal_maps = {
      {SignalKind::D, {-0.0138, 0.5219, 0.0, SignalTransform::Log1p}},
      {SignalKind::M, {-0.15, 0.3, 0.0, SignalTransform::Identity}},
      {SignalKind::A, {0.3492, 0.3788, 0.0, SignalTransform::Identity}},
      {SignalKind::H, {0.9803, 0.1252, 0.0, SignalTransform::Identity}},
  };
  c.signal_noise_sd = {
      {SignalKind::D, 0.5}, {SignalKind::M, 0.15}, {SignalKind::A, 0.15}, {SignalKind::H, 0.15}};
  c.amount = Distribution::normal(460.0, 80.0, 100.0, 2000.0);
  c.term_months = Distribution::categorical({3, 6, 9, 12}, {0.15, 0.60, 0.15, 0.10});
  c.annual_rate = Distribution::normal(0.14, 0.013, 0.05, 0.36);
  return c;
}

WorldConfig world_config_from_json(const Json& j) {
  WorldConfig c = default_world_config();
  if (!j.is_object()) config_error("world config must be a JSON object");
  const auto n = cfg::get<long long>(j, "n_applicants", "");
  if (n < 1) config_error("field /n_applicants must be >= 1");
  c.n_applicants = static_cast<std::size_t>(n);
  c.seed = cfg::get<std::uint64_t>(j, "seed", "");
  c.max_applications = cfg::get_or<int>(j, "max_applications", "", c.max_applications);
  c.female_share = cfg::get_or<double>(j, "female_share", "", c.female_share);
  c.true_gamma_male = cfg::get_or<double>(j, "true_gamma_male", "", c.true_gamma_male);
  c.true_quality_sd = cfg::get_or<double>(j, "true_quality_sd", "", c.true_quality_sd);

  if (j.contains("covariates")) {
    const Json& covs = j["covariates"];
    if (!covs.is_object()) config_error("field /covariates must be an object");
    c.covariates.clear();
    for (const auto& [name, spec] : covs.items())
      c.covariates.emplace_back(name, Distribution::from_json(spec, "/covariates/" + name));
  }
  if (j.contains("true_beta")) {
    const Json& tb = j["true_beta"];
    if (!tb.is_object()) config_error("field /true_beta must be an object");
    c.true_beta.clear();
    for (const auto& [name, v] : tb.items()) {
      if (!v.is_number()) config_error("field /true_beta/" + name + " must be a number");
      c.true_beta.push_back({name, v.get<double>()});
    }
  }
  if (j.contains("signal_maps")) {
    const Json& maps = j["signal_maps"];
    if (!maps.is_object()) config_error("field /signal_maps must be an object");
    c.signal_maps.clear();
    for (const auto& [key, m] : maps.items()) {
      const std::string path = "/signal_maps/" + key;
      SignalMap map;
      map.slope = cfg::get<double>(m, "slope", path);
      map.intercept = cfg::get<double>(m, "intercept", path);
      map.transform = parse_transform(
          cfg::get_or<std::string>(m, "transform", path, key == "D" ? "log1p" : "identity"));
      c.signal_maps[parse_signal(key)] = map;
    }
  }
  if (j.contains("signal_noise_sd")) {
    const Json& sds = j["signal_noise_sd"];
    if (!sds.is_object()) config_error("field /signal_noise_sd must be an object");
    c.signal_noise_sd.clear();
    for (const auto& [key, v] : sds.items()) {
      if (!v.is_number()) config_error("field /signal_noise_sd/" + key + " must be a number");
      c.signal_noise_sd[parse_signal(key)] = v.get<double>();
    }
  }
  if (j.contains("reapplication"))
    c.reapply_after_repaid =
        cfg::get<double>(j["reapplication"], "after_repaid", "/reapplication");
  if (j.contains("terms")) {
    const Json& terms = j["terms"];
    if (terms.contains("amount"))
      c.amount = Distribution::from_json(terms["amount"], "/terms/amount");
    if (terms.contains("term_months"))
      c.term_months = Distribution::from_json(terms["term_months"], "/terms/term_months");
    if (terms.contains("annual_rate"))
      c.annual_rate = Distribution::from_json(terms["annual_rate"], "/terms/annual_rate");
  }
  c.validate();
  return c;
}

Json world_config_to_json(const WorldConfig& c) {
  Json j;
  j["n_applicants"] = c.n_applicants;
  j["seed"] = c.seed;
  j["max_applications"] = c.max_applications;
  j["female_share"] = c.female_share;
  j["true_gamma_male"] = c.true_gamma_male;
  j["true_quality_sd"] = c.true_quality_sd;
  Json covs = Json::object();
  for (const auto& [name, d] : c.covariates) covs[name] = d.to_json();
  j["covariates"] = covs;
  Json tb = Json::object();
  for (const auto& b : c.true_beta) tb[b.name] = b.value;
  j["true_beta"] = tb;
  Json maps = Json::object();
  for (const auto& [kind, m] : c.signal_maps)
    maps[std::string(to_string(kind))] = {
        {"slope", m.slope}, {"intercept", m.intercept}, {"transform", to_string(m.transform)}};
  j["signal_maps"] = maps;
  Json sds = Json::object();
  for (const auto& [kind, sd] : c.signal_noise_sd) sds[std::string(to_string(kind))] = sd;
  j["signal_noise_sd"] = sds;
  j["reapplication"] = {{"after_repaid", c.reapply_after_repaid}};
  j["terms"] = {{"amount", c.amount.to_json()},
                {"term_months", c.term_months.to_json()},
                {"annual_rate", c.annual_rate.to_json()}};
  return j;
}

std::vector<PopulationMember> generate_population(const WorldConfig& config) {
  config.validate();
  std::vector<PopulationMember> out(config.n_applicants);
  parallel_chunks(config.n_applicants, kApplicantChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      StreamRng rng(config.seed, i, 0, StreamTag::Population);
      PopulationMember& m = out[i];
      m.profile.id = std::to_string(i + 1);
      m.profile.gender = rng.bernoulli(config.female_share) ? Gender::Female : Gender::Male;
      m.profile.covariates["constant"] = 1.0;
      for (const auto& [name, dist] : config.covariates)
        m.profile.covariates[name] = dist.sample(rng);
      double mean = 0.0;
      for (const auto& b : config.true_beta) mean += b.value * m.profile.covariates.at(b.name);
      if (m.profile.is_male()) mean += config.true_gamma_male;
      m.true_quality = mean + config.true_quality_sd * rng.normal();
    }
  });
  return out;
}

LoanTerms generate_terms(const WorldConfig& config, StreamRng& rng) {
  const double amount = std::max(1.0, config.amount.sample(rng));
  const int term = std::max(1, static_cast<int>(std::lround(config.term_months.sample(rng))));
  const double rate = std::max(1e-6, config.annual_rate.sample(rng));
  return LoanTerms::from_contract(amount, term, rate);
}

RepaymentSignals generate_signals(double true_quality, const WorldConfig& config,
                                  StreamRng& rng) {
  RepaymentSignals s;
  for (SignalKind kind : kAllSignals) {
    const auto it = config.signal_maps.find(kind);
    if (it == config.signal_maps.end()) continue;
    const SignalMap& m = it->second;
    const auto sd = config.signal_noise_sd.find(kind);
    const double noise = sd == config.signal_noise_sd.end() ? 0.0 : sd->second;
    double draw = m.intercept + m.slope * true_quality;
    if (noise > 0.0) draw += noise * rng.normal();
    if (kind == SignalKind::D) {
      const double scaled = std::max(0.0, draw);
      s.overdue_days = m.transform == SignalTransform::Log1p ? std::expm1(scaled) : scaled;
    } else {
      s.set(kind, std::clamp(draw, 0.0, 1.0));
    }
  }
  return s;
}

Outcome generate_outcome(double true_quality, StreamRng& rng) {
  return rng.uniform() < logistic(true_quality) ? Outcome::Repaid : Outcome::Defaulted;
}

FullSampleDataset simulate_full_sample(const WorldConfig& config) {
  auto population = generate_population(config);
  FullSampleDataset ds;
  const std::size_t n = population.size();
  ds.profiles.resize(n);
  ds.histories.resize(n);
  ds.true_quality.resize(n);
  parallel_chunks(n, kApplicantChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double q = population[i].true_quality;
      auto& history = ds.histories[i];
      for (int t = 1; t <= config.max_applications; ++t) {
        const auto ti = static_cast<std::uint64_t>(t);
        StreamRng terms_rng(config.seed, i, ti, StreamTag::Terms);
        StreamRng signal_rng(config.seed, i, ti, StreamTag::Signals);
        StreamRng outcome_rng(config.seed, i, ti, StreamTag::Outcome);
        Application app;
        app.terms = generate_terms(config, terms_rng);
        app.signals = generate_signals(q, config, signal_rng);
        app.outcome = generate_outcome(q, outcome_rng);
        app.realized_profit = app.outcome == Outcome::Repaid ? app.terms.gain_if_repaid
                                                             : -app.terms.loss_if_default;
        history.push_back(app);
        if (app.outcome == Outcome::Defaulted) break;
        StreamRng reapply_rng(config.seed, i, ti, StreamTag::Reapply);
        if (!reapply_rng.bernoulli(config.reapply_after_repaid)) break;
      }
      ds.profiles[i] = std::move(population[i].profile);
      ds.true_quality[i] = q;
    }
  });
  return ds;
}

std::vector<DecisionRecord> simulate_decisions(const FullSampleDataset& dataset,
                                               const ModelParams& params, DecisionMode mode,
                                               std::uint64_t seed) {
  params.validate();
  const std::size_t n = dataset.applicant_count();
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + dataset.histories[i].size();
  std::vector<DecisionRecord> records(offsets[n]);

  parallel_chunks(n, kApplicantChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const ApplicantProfile& profile = dataset.profiles[i];
      const auto& history = dataset.histories[i];
      BeliefState belief = initial_belief(profile, params);
      bool previous_granted = false;
      for (std::size_t k = 0; k < history.size(); ++k) {
        DecisionRecord& r = records[offsets[i] + k];
        const bool update = k > 0 && (mode == DecisionMode::KeepProbabilities || previous_granted);
        if (update) belief = advance_belief(belief, history[k - 1].signals, params);
        r.applicant = i;
        r.t = static_cast<int>(k + 1);
        r.gender = profile.gender;
        r.belief_mean = belief.mean;
        r.belief_variance = belief.variance;
        r.non_default_prob = non_default_prob(belief);
        r.approval_prob = approval_prob(r.non_default_prob, history[k].terms, profile.gender, params);
        r.updated_from_signals = update;
        r.outcome = history[k].outcome;
        r.realized_profit = history[k].realized_profit;
        if (mode == DecisionMode::SampleDecisions) {
          StreamRng rng(seed, i, k + 1, StreamTag::Decision);
          r.approved = rng.uniform() < r.approval_prob;
          previous_granted = *r.approved;
        }
      }
    }
  });
  return records;
}

}  // namespace biasforge
