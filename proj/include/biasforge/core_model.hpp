#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biasforge {

enum class Gender { Male, Female };

// Canonical order is D, M, A, H; every ordered container of signals follows it.
enum class SignalKind { D = 0, M = 1, A = 2, H = 3 };
inline constexpr std::array<SignalKind, 4> kAllSignals{SignalKind::D, SignalKind::M,
                                                       SignalKind::A, SignalKind::H};

enum class SignalTransform { Log1p, Identity };
enum class Updater { WeightedSum, ConjugateBayes };
enum class ShockDistribution { Logistic, Normal };

// |slope| below this is treated as singular.
inline constexpr double kSlopeTolerance = 1e-8;

std::string_view to_string(Gender g);
std::string_view to_string(SignalKind s);
std::string_view to_string(SignalTransform t);
std::string_view to_string(Updater u);
std::string_view to_string(ShockDistribution s);
Gender parse_gender(std::string_view text);
SignalKind parse_signal(std::string_view text);
SignalTransform parse_transform(std::string_view text);
Updater parse_updater(std::string_view text);
ShockDistribution parse_shock(std::string_view text);

struct ApplicantProfile {
  std::string id;
  Gender gender = Gender::Female;
  // Must contain "constant" == 1. Typical names: first_app_month, housing,
  // education, income, dpi; age, marriage, children are admitted by name.
  std::map<std::string, double> covariates;

  bool is_male() const noexcept { return gender == Gender::Male; }
  void validate() const;
};

struct RepaymentSignals {
  double overdue_days = 0.0;      // D >= 0
  double overdue_frac = 0.0;      // M in [0,1]
  double attitude_frac = 0.0;     // A in [0,1]
  double help_frac = 0.0;         // H in [0,1]

  double value(SignalKind s) const noexcept;
  void set(SignalKind s, double v) noexcept;
  void validate() const;
};

struct SignalMap {
  double slope = 1.0;
  double intercept = 0.0;
  double weight = 0.0;
  SignalTransform transform = SignalTransform::Identity;

  bool operator==(const SignalMap&) const = default;
};

struct Coefficient {
  std::string name;
  double value = 0.0;

  bool operator==(const Coefficient&) const = default;
};

struct ModelParams {
  std::vector<Coefficient> beta;  // includes "constant"; beta for females is 0
  double beta_male = 0.0;
  double c_male = 0.0;  // preference bias; c for females is 0
  double z = 1.0;       // price (marginal utility of money)
  std::map<SignalKind, SignalMap> signal_maps;
  double sigma_q0 = 1.0;  // prior sd; conjugate updater only
  std::map<SignalKind, double> signal_noise_sd;  // conjugate updater only
  Updater updater = Updater::WeightedSum;
  ShockDistribution shock = ShockDistribution::Logistic;

  bool operator==(const ModelParams&) const = default;

  const double* find_beta(std::string_view name) const noexcept;
  double* find_beta(std::string_view name) noexcept;
  double weight_sum() const noexcept;
  void validate() const;
};

struct BeliefState {
  double mean = 0.0;
  double variance = 0.0;  // carried only by the conjugate updater

  bool operator==(const BeliefState&) const = default;
};

struct LoanTerms {
  double amount = 0.0;
  int term_months = 1;
  double annual_rate = 0.0;
  double gain_if_repaid = 0.0;   // a
  double loss_if_default = 0.0;  // b

  // a = interest income over the term, b = principal.
  static LoanTerms from_contract(double amount, int term_months, double annual_rate);
  void validate() const;
};

double apply_transform(SignalTransform t, double x);

// Mean of the evaluator's prior over credit quality: beta . X plus beta_male for
// men.
double prior_quality_mean(const ApplicantProfile& profile, const ModelParams& params);

BeliefState initial_belief(const ApplicantProfile& profile, const ModelParams& params);

// (transform(signal) - intercept) / slope for one signal map.
double signal_implied_quality(const RepaymentSignals& signals, SignalKind kind,
                              const ModelParams& params);

// Weighted-sum revision: (1 - sum alpha) * prev + sum alpha_s * implied_s.
BeliefState update_belief(const BeliefState& prev, const RepaymentSignals& signals,
                          const ModelParams& params);

// Normal-normal conjugate revision in information form.
BeliefState update_belief_bayes(const BeliefState& prev, const RepaymentSignals& signals,
                                const ModelParams& params);

// Dispatches on params.updater.
BeliefState advance_belief(const BeliefState& prev, const RepaymentSignals& signals,
                           const ModelParams& params);

double logistic(double x) noexcept;
double non_default_prob(double belief_mean) noexcept;
double non_default_prob(const BeliefState& belief) noexcept;

// Deterministic part of the approval utility.
double approval_utility(double p, const LoanTerms& terms, Gender gender,
                        const ModelParams& params);

// CDF of the utility shock.
double shock_cdf(double v, ShockDistribution shock) noexcept;

double approval_prob(double p, const LoanTerms& terms, Gender gender, const ModelParams& params);

// Named scalar parameters: beta.<cov>, beta_male, c_male, z, slope.<S>,
// intercept.<S>, alpha.<S>, sigma_q0, noise_sd.<S>. Order is stable.
std::vector<std::string> parameter_names(const ModelParams& params);
std::optional<double> get_parameter(const ModelParams& params, std::string_view name);
void set_parameter(ModelParams& params, std::string_view name, double value);

}  // namespace biasforge
