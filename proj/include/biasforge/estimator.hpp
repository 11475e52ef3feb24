#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biasforge/core_model.hpp"
#include "biasforge/dataset.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {

enum class OptimizerKind { QuasiNewton, NelderMead };
enum class SeMethod { HessianInverse, Opg };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(SeMethod m);
OptimizerKind parse_optimizer(std::string_view text);
SeMethod parse_se_method(std::string_view text);

struct EstimationConfig {
  ModelParams initial;
  // Names as in parameter_names(). Everything else stays at its initial value.
  std::vector<std::string> free_params;
  OptimizerKind optimizer = OptimizerKind::QuasiNewton;
  int max_iters = 500;
  // Convergence threshold on the gradient norm of the mean per-observation
  // log-likelihood in the transformed space.
  double tol = 1e-6;
  SeMethod se_method = SeMethod::HessianInverse;
  int multistart = 5;
  double perturbation = 0.5;  // relative, applied to free natural values
  std::uint64_t seed = 1;

  void validate() const;
};

// Betas, beta_male, c_male, z and the slope of every signal map. Intercepts and
// weights stay frozen.
std::vector<std::string> default_free_params(const ModelParams& params);

// Fields: initial (params object or preset name, default table2-v1),
// free_params, optimizer, max_iters, tol, se_method, multistart,
// perturbation, seed.
EstimationConfig estimation_config_from_json(const Json& j);
Json estimation_config_to_json(const EstimationConfig& config);

// Bijection between the free natural parameters and R^k. z, sigma_q0 and noise
// sds go through log; free alphas share a softmax with a fixed-zero retention
// logit scaled by the budget left over by frozen alphas; the rest is identity.
class ParameterTransform {
 public:
  ParameterTransform(const ModelParams& base, std::vector<std::string> free_names);

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

  Eigen::VectorXd to_unconstrained(const ModelParams& p) const;
  ModelParams to_natural(const Eigen::VectorXd& u) const;
  Eigen::VectorXd natural_values(const ModelParams& p) const;
  // d natural / d u, free parameters only.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const;

 private:
  enum class Kind { Identity, Log, Simplex };
  ModelParams base_;
  std::vector<std::string> names_;
  std::vector<Kind> kinds_;
  std::vector<std::size_t> simplex_;  // indices of free alphas
  double alpha_budget_ = 1.0;
};

// Compiled view of a decision log for repeated likelihood evaluation.
class LikelihoodModel {
 public:
  LikelihoodModel(const DecisionLog& log, const ModelParams& reference);

  std::size_t n_observations() const noexcept { return n_obs_; }
  std::size_t n_applicants() const noexcept { return applicants_.size(); }

  double value(const ModelParams& params) const;
  std::vector<double> per_applicant(const ModelParams& params) const;

  // Gradient over every name in parameter_names(params). Analytic for the
  // weighted-sum updater; throws Config for the conjugate updater.
  double value_and_gradient(const ModelParams& params, std::vector<double>& grad) const;
  // Per-applicant gradients (rows), same layout.
  std::vector<std::vector<double>> per_applicant_gradients(const ModelParams& params) const;

 private:
  struct Record {
    double a = 0.0, b = 0.0;
    bool approved = false;
    bool update = false;               // belief revised before this decision
    std::array<double, 4> signal{};    // transformed signals of the previous loan
    RepaymentSignals raw;              // previous loan, for the generic path
  };
  struct Applicant {
    std::vector<double> x;  // aligned with reference beta
    bool male = false;
    std::vector<Record> records;
  };

  void check_layout(const ModelParams& params) const;
  double applicant_value(const Applicant& a, const ModelParams& params) const;
  double applicant_gradient(const Applicant& a, const ModelParams& params,
                            std::vector<double>& grad) const;

  std::vector<Applicant> applicants_;
  std::vector<std::string> beta_names_;
  std::map<SignalKind, SignalTransform> transforms_;
  std::size_t n_obs_ = 0;
};

// Probabilities floored at 1e-300 before the log; empty log gives 0.
double log_likelihood(const DecisionLog& log, const ModelParams& params);

// Gradient in the transformed space keyed by free parameter name. Analytic for
// the weighted-sum updater, central differences with step 1e-5 (1 + |u|)
// otherwise.
std::map<std::string, double> log_likelihood_gradient(const DecisionLog& log,
                                                      const ModelParams& params,
                                                      const std::vector<std::string>& free_params);

struct StartSummary {
  double initial_loglik = 0.0;
  double final_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct EstimateReport {
  ModelParams point_estimates;
  std::map<std::string, double> std_errors;  // free parameters only; empty if singular
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t n_observations = 0;
  double gradient_norm_at_optimum = 0.0;
  std::vector<std::string> free_params;
  std::string diagnostic;
  std::vector<StartSummary> starts;
};

EstimateReport fit(const DecisionLog& log, const EstimationConfig& config);

Json to_json(const EstimateReport& report);

}  // namespace biasforge
