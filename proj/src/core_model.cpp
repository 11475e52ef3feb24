#include "biasforge/core_model.hpp"

#include <cmath>
#include <string>

#include "biasforge/error.hpp"

namespace biasforge {
namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

void require_finite(double v, std::string_view what) {
  if (!std::isfinite(v)) config_error(std::string(what) + " is not finite");
}

const SignalMap& checked_map(const ModelParams& params, SignalKind kind) {
  const auto it = params.signal_maps.find(kind);
  if (it == params.signal_maps.end())
    config_error("no signal map configured for signal " + std::string(to_string(kind)));
  if (std::abs(it->second.slope) < kSlopeTolerance)
    throw Error(ErrorKind::Singularity,
                "slope of signal map " + std::string(to_string(kind)) + " is below tolerance");
  return it->second;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::string_view to_string(SignalKind s) {
  switch (s) {
    case SignalKind::D: return "D";
    case SignalKind::M: return "M";
    case SignalKind::A: return "A";
    case SignalKind::H: return "H";
  }
  return "?";
}

std::string_view to_string(SignalTransform t) {
  return t == SignalTransform::Log1p ? "log1p" : "identity";
}

std::string_view to_string(Updater u) {
  return u == Updater::WeightedSum ? "weighted_sum" : "conjugate_bayes";
}

std::string_view to_string(ShockDistribution s) {
  return s == ShockDistribution::Logistic ? "logistic" : "normal";
}

Gender parse_gender(std::string_view text) {
  if (text == "male" || text == "M" || text == "m") return Gender::Male;
  if (text == "female" || text == "F" || text == "f") return Gender::Female;
  throw Error(ErrorKind::Data, "unknown gender '" + std::string(text) + "'");
}

SignalKind parse_signal(std::string_view text) {
  for (SignalKind s : kAllSignals)
    if (to_string(s) == text) return s;
  config_error("unknown signal '" + std::string(text) + "'");
}

SignalTransform parse_transform(std::string_view text) {
  if (text == "log1p") return SignalTransform::Log1p;
  if (text == "identity") return SignalTransform::Identity;
  config_error("unknown transform '" + std::string(text) + "'");
}

Updater parse_updater(std::string_view text) {
  if (text == "weighted_sum") return Updater::WeightedSum;
  if (text == "conjugate_bayes") return Updater::ConjugateBayes;
  config_error("unknown updater '" + std::string(text) + "'");
}

ShockDistribution parse_shock(std::string_view text) {
  if (text == "logistic") return ShockDistribution::Logistic;
  if (text == "normal") return ShockDistribution::Normal;
  config_error("unknown shock distribution '" + std::string(text) + "'");
}

void ApplicantProfile::validate() const {
  const auto it = covariates.find("constant");
  if (it == covariates.end() || it->second != 1.0)
    throw Error(ErrorKind::Data, "applicant " + id + ": constant covariate must be exactly 1");
  for (const auto& [name, v] : covariates)
    if (!std::isfinite(v))
      throw Error(ErrorKind::Data, "applicant " + id + ": covariate " + name + " is not finite");
}

double RepaymentSignals::value(SignalKind s) const noexcept {
  switch (s) {
    case SignalKind::D: return overdue_days;
    case SignalKind::M: return overdue_frac;
    case SignalKind::A: return attitude_frac;
    case SignalKind::H: return help_frac;
  }
  return 0.0;
}

void RepaymentSignals::set(SignalKind s, double v) noexcept {
  switch (s) {
    case SignalKind::D: overdue_days = v; break;
    case SignalKind::M: overdue_frac = v; break;
    case SignalKind::A: attitude_frac = v; break;
    case SignalKind::H: help_frac = v; break;
  }
}

void RepaymentSignals::validate() const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!std::isfinite(overdue_days) || overdue_days < 0.0)
    throw Error(ErrorKind::Data, "overdue days must be finite and >= 0");
  if (!in_unit(overdue_frac) || !in_unit(attitude_frac) || !in_unit(help_frac))
    throw Error(ErrorKind::Data, "signal fractions must lie in [0,1]");
}

const double* ModelParams::find_beta(std::string_view name) const noexcept {
  for (const auto& c : beta)
    if (c.name == name) return &c.value;
  return nullptr;
}

double* ModelParams::find_beta(std::string_view name) noexcept {
  for (auto& c : beta)
    if (c.name == name) return &c.value;
  return nullptr;
}

double ModelParams::weight_sum() const noexcept {
  double s = 0.0;
  for (const auto& [kind, m] : signal_maps) s += m.weight;
  return s;
}

void ModelParams::validate() const {
  for (const auto& c : beta) require_finite(c.value, "beta." + c.name);
  require_finite(beta_male, "beta_male");
  require_finite(c_male, "c_male");
  if (!std::isfinite(z) || z <= 0.0) throw Error(ErrorKind::Domain, "price z must be > 0");
  if (!std::isfinite(sigma_q0) || sigma_q0 <= 0.0)
    throw Error(ErrorKind::Domain, "sigma_q0 must be > 0");
  for (const auto& [kind, m] : signal_maps) {
    const std::string tag(to_string(kind));
    require_finite(m.slope, "slope." + tag);
    require_finite(m.intercept, "intercept." + tag);
    require_finite(m.weight, "alpha." + tag);
    if (std::abs(m.slope) < kSlopeTolerance)
      throw Error(ErrorKind::Singularity, "slope." + tag + " is below tolerance");
    if (m.weight < 0.0) throw Error(ErrorKind::Domain, "alpha." + tag + " must be >= 0");
  }
  if (weight_sum() > 1.0 + 1e-12)
    throw Error(ErrorKind::Domain, "signal weights must sum to at most 1");
  if (updater == Updater::ConjugateBayes) {
    for (const auto& [kind, m] : signal_maps) {
      const auto it = signal_noise_sd.find(kind);
      if (it == signal_noise_sd.end() || !(it->second > 0.0))
        throw Error(ErrorKind::Singularity,
                    "noise_sd." + std::string(to_string(kind)) + " must be > 0");
    }
  }
}

LoanTerms LoanTerms::from_contract(double amount, int term_months, double annual_rate) {
  LoanTerms t;
  t.amount = amount;
  t.term_months = term_months;
  t.annual_rate = annual_rate;
  t.gain_if_repaid = amount * annual_rate * term_months / 12.0;
  t.loss_if_default = amount;
  return t;
}

void LoanTerms::validate() const {
  if (!(amount > 0.0)) throw Error(ErrorKind::Data, "loan amount must be > 0");
  if (term_months < 1) throw Error(ErrorKind::Data, "loan term must be >= 1 month");
  if (!(gain_if_repaid > 0.0) || !(loss_if_default > 0.0))
    throw Error(ErrorKind::Data, "loan gain and loss must be > 0");
  if (!std::isfinite(annual_rate)) throw Error(ErrorKind::Data, "annual rate is not finite");
}

double apply_transform(SignalTransform t, double x) {
  return t == SignalTransform::Log1p ? std::log1p(x) : x;
}

double prior_quality_mean(const ApplicantProfile& profile, const ModelParams& params) {
  for (const auto& [name, v] : profile.covariates)
    if (params.find_beta(name) == nullptr)
      config_error("no beta coefficient for covariate '" + name + "'");
  double q = 0.0;
  for (const auto& c : params.beta) {
    const auto it = profile.covariates.find(c.name);
    if (it == profile.covariates.end())
      config_error("applicant " + profile.id + " lacks covariate '" + c.name + "'");
    q += c.value * it->second;
  }
  if (profile.is_male()) q += params.beta_male;
  return q;
}

BeliefState initial_belief(const ApplicantProfile& profile, const ModelParams& params) {
  return {prior_quality_mean(profile, params), params.sigma_q0 * params.sigma_q0};
}

double signal_implied_quality(const RepaymentSignals& signals, SignalKind kind,
                              const ModelParams& params) {
  const SignalMap& m = checked_map(params, kind);
  return (apply_transform(m.transform, signals.value(kind)) - m.intercept) / m.slope;
}

BeliefState update_belief(const BeliefState& prev, const RepaymentSignals& signals,
                          const ModelParams& params) {
  double total = 0.0;
  for (const auto& [kind, m] : params.signal_maps) {
    if (m.weight < 0.0)
      throw Error(ErrorKind::Domain, "alpha." + std::string(to_string(kind)) + " is negative");
    total += m.weight;
  }
  if (total > 1.0 + 1e-12) throw Error(ErrorKind::Domain, "signal weights sum above 1");

  double mean = (1.0 - total) * prev.mean;
  for (const auto& [kind, m] : params.signal_maps)
    mean += m.weight * signal_implied_quality(signals, kind, params);
  return {mean, prev.variance};
}

BeliefState update_belief_bayes(const BeliefState& prev, const RepaymentSignals& signals,
                                const ModelParams& params) {
  if (params.signal_maps.empty()) return prev;
  if (!(prev.variance > 0.0))
    throw Error(ErrorKind::Singularity, "prior belief variance must be > 0");

  const double prior_precision = 1.0 / prev.variance;
  double precision = prior_precision;
  double weighted = prior_precision * prev.mean;
  for (const auto& [kind, m] : params.signal_maps) {
    const SignalMap& map = checked_map(params, kind);
    const auto sd = params.signal_noise_sd.find(kind);
    if (sd == params.signal_noise_sd.end() || !(sd->second > 0.0))
      throw Error(ErrorKind::Singularity,
                  "noise_sd." + std::string(to_string(kind)) + " must be > 0");
    const double inv_var = 1.0 / (sd->second * sd->second);
    const double innovation = apply_transform(map.transform, signals.value(kind)) - map.intercept;
    precision += map.slope * map.slope * inv_var;
    weighted += map.slope * innovation * inv_var;
  }
  const double variance = 1.0 / precision;
  return {variance * weighted, variance};
}

BeliefState advance_belief(const BeliefState& prev, const RepaymentSignals& signals,
                           const ModelParams& params) {
  return params.updater == Updater::WeightedSum ? update_belief(prev, signals, params)
                                                : update_belief_bayes(prev, signals, params);
}

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double non_default_prob(double belief_mean) noexcept { return logistic(belief_mean); }

double non_default_prob(const BeliefState& belief) noexcept { return logistic(belief.mean); }

double approval_utility(double p, const LoanTerms& terms, Gender gender,
                        const ModelParams& params) {
  const double expected_profit = p * terms.gain_if_repaid - (1.0 - p) * terms.loss_if_default;
  const double bias = gender == Gender::Male ? params.c_male : 0.0;
  return params.z * expected_profit - bias;
}

double shock_cdf(double v, ShockDistribution shock) noexcept {
  if (shock == ShockDistribution::Logistic) return logistic(v);
  return 0.5 * std::erfc(-v / std::sqrt(2.0));
}

double approval_prob(double p, const LoanTerms& terms, Gender gender, const ModelParams& params) {
  return shock_cdf(approval_utility(p, terms, gender, params), params.shock);
}

std::vector<std::string> parameter_names(const ModelParams& params) {
  std::vector<std::string> names;
  for (const auto& c : params.beta) names.push_back("beta." + c.name);
  names.emplace_back("beta_male");
  names.emplace_back("c_male");
  names.emplace_back("z");
  for (const auto& [kind, m] : params.signal_maps) {
    const std::string tag(to_string(kind));
    names.push_back("slope." + tag);
    names.push_back("intercept." + tag);
    names.push_back("alpha." + tag);
  }
  names.emplace_back("sigma_q0");
  for (const auto& [kind, sd] : params.signal_noise_sd)
    names.push_back("noise_sd." + std::string(to_string(kind)));
  return names;
}

namespace {

// Resolves a parameter name to its storage slot, or nullptr.
double* parameter_slot(ModelParams& params, std::string_view name) {
  if (name == "beta_male") return &params.beta_male;
  if (name == "c_male") return &params.c_male;
  if (name == "z") return &params.z;
  if (name == "sigma_q0") return &params.sigma_q0;
  const auto dot = name.find('.');
  if (dot == std::string_view::npos) return nullptr;
  const auto head = name.substr(0, dot);
  const auto tail = name.substr(dot + 1);
  if (head == "beta") return params.find_beta(tail);

  SignalKind kind{};
  bool known = false;
  for (SignalKind s : kAllSignals)
    if (to_string(s) == tail) kind = s, known = true;
  if (!known) return nullptr;
  if (head == "noise_sd") {
    const auto it = params.signal_noise_sd.find(kind);
    return it == params.signal_noise_sd.end() ? nullptr : &it->second;
  }
  const auto it = params.signal_maps.find(kind);
  if (it == params.signal_maps.end()) return nullptr;
  if (head == "slope") return &it->second.slope;
  if (head == "intercept") return &it->second.intercept;
  if (head == "alpha") return &it->second.weight;
  return nullptr;
}

}  // namespace

std::optional<double> get_parameter(const ModelParams& params, std::string_view name) {
  const double* slot = parameter_slot(const_cast<ModelParams&>(params), name);
  if (slot == nullptr) return std::nullopt;
  return *slot;
}

void set_parameter(ModelParams& params, std::string_view name, double value) {
  double* slot = parameter_slot(params, name);
  if (slot == nullptr) config_error("unknown parameter '" + std::string(name) + "'");
  *slot = value;
}

}  // namespace biasforge
