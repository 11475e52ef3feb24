#include "biasforge/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "biasforge/error.hpp"
#include "biasforge/optimize.hpp"
#include "biasforge/parallel.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/rng.hpp"

namespace biasforge {
namespace {

constexpr double kProbFloor = 1e-300;
constexpr std::size_t kChunk = 256;

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// log F(w) and its derivative for the shock CDF, floored.
std::pair<double, double> log_cdf(double w, ShockDistribution shock) {
  const double log_floor = std::log(kProbFloor);
  if (shock == ShockDistribution::Logistic) {
    const double lf = w >= 0.0 ? -std::log1p(std::exp(-w)) : w - std::log1p(std::exp(w));
    if (lf < log_floor) return {log_floor, 0.0};
    return {lf, logistic(-w)};
  }
  const double f = 0.5 * std::erfc(-w / std::numbers::sqrt2);
  if (f < kProbFloor) return {log_floor, 0.0};
  const double pdf = std::exp(-0.5 * w * w) / std::sqrt(2.0 * std::numbers::pi);
  return {std::log(f), pdf / f};
}

// Log-probability of the observed decision at utility v, and d/dv.
std::pair<double, double> decision_term(double v, bool approved, ShockDistribution shock) {
  if (approved) return log_cdf(v, shock);
  const auto [l, d] = log_cdf(-v, shock);
  return {l, -d};
}

}  // namespace

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::QuasiNewton ? "quasi_newton" : "nelder_mead";
}

std::string_view to_string(SeMethod m) { return m == SeMethod::HessianInverse ? "hessian" : "opg"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "quasi_newton" || text == "bfgs") return OptimizerKind::QuasiNewton;
  if (text == "nelder_mead") return OptimizerKind::NelderMead;
  throw Error(ErrorKind::Config, "unknown optimizer '" + std::string(text) + "'");
}

SeMethod parse_se_method(std::string_view text) {
  if (text == "hessian") return SeMethod::HessianInverse;
  if (text == "opg") return SeMethod::Opg;
  throw Error(ErrorKind::Config, "unknown se_method '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- config

void EstimationConfig::validate() const {
  initial.validate();
  if (!(tol > 0.0)) throw Error(ErrorKind::Config, "tol must be > 0");
  if (multistart < 1) throw Error(ErrorKind::Config, "multistart must be >= 1");
  if (max_iters < 1) throw Error(ErrorKind::Config, "max_iters must be >= 1");
  if (!(perturbation >= 0.0 && perturbation < 1.0))
    throw Error(ErrorKind::Config, "perturbation must be in [0, 1)");
  if (free_params.empty()) throw Error(ErrorKind::Config, "no free parameters");
  const auto known = parameter_names(initial);
  std::set<std::string> seen;
  for (const auto& name : free_params) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw Error(ErrorKind::Config, "unknown free parameter '" + name + "'");
    if (!seen.insert(name).second)
      throw Error(ErrorKind::Config, "free parameter '" + name + "' listed twice");
  }
}

std::vector<std::string> default_free_params(const ModelParams& params) {
  std::vector<std::string> names;
  for (const auto& c : params.beta) names.push_back("beta." + c.name);
  names.insert(names.end(), {"beta_male", "c_male", "z"});
  for (const auto& [kind, m] : params.signal_maps)
    names.push_back("slope." + std::string(to_string(kind)));
  return names;
}

EstimationConfig estimation_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "estimation config must be an object");
  EstimationConfig c;
  c.initial = j.contains("initial") ? params_from_json(j["initial"]) : table2_preset();
  if (j.contains("free_params")) {
    c.free_params = cfg::get<std::vector<std::string>>(j, "free_params", "");
  } else {
    c.free_params = default_free_params(c.initial);
  }
  c.optimizer = parse_optimizer(cfg::get_or<std::string>(j, "optimizer", "", "quasi_newton"));
  c.max_iters = cfg::get_or<int>(j, "max_iters", "", c.max_iters);
  c.tol = cfg::get_or<double>(j, "tol", "", c.tol);
  c.se_method = parse_se_method(cfg::get_or<std::string>(j, "se_method", "", "hessian"));
  c.multistart = cfg::get_or<int>(j, "multistart", "", c.multistart);
  c.perturbation = cfg::get_or<double>(j, "perturbation", "", c.perturbation);
  c.seed = cfg::get_or<std::uint64_t>(j, "seed", "", c.seed);
  c.validate();
  return c;
}

Json estimation_config_to_json(const EstimationConfig& c) {
  return {{"initial", params_to_json(c.initial)},
          {"free_params", c.free_params},
          {"optimizer", std::string(to_string(c.optimizer))},
          {"max_iters", c.max_iters},
          {"tol", c.tol},
          {"se_method", std::string(to_string(c.se_method))},
          {"multistart", c.multistart},
          {"perturbation", c.perturbation},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------- transform

ParameterTransform::ParameterTransform(const ModelParams& base, std::vector<std::string> free_names)
    : base_(base), names_(std::move(free_names)) {
  const auto known = parameter_names(base_);
  double frozen_alpha = 0.0;
  for (const auto& [kind, m] : base_.signal_maps) {
    const std::string name = "alpha." + std::string(to_string(kind));
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) frozen_alpha += m.weight;
  }
  alpha_budget_ = 1.0 - frozen_alpha;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const std::string& n = names_[i];
    if (std::find(known.begin(), known.end(), n) == known.end())
      throw Error(ErrorKind::Config, "unknown parameter '" + n + "'");
    if (n == "z" || n == "sigma_q0" || starts_with(n, "noise_sd.")) {
      kinds_.push_back(Kind::Log);
    } else if (starts_with(n, "alpha.")) {
      kinds_.push_back(Kind::Simplex);
      simplex_.push_back(i);
    } else {
      kinds_.push_back(Kind::Identity);
    }
  }
  if (!simplex_.empty() && !(alpha_budget_ > 0.0))
    throw Error(ErrorKind::Domain, "frozen signal weights leave no room for free weights");
}

Eigen::VectorXd ParameterTransform::natural_values(const ModelParams& p) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    v[static_cast<Eigen::Index>(i)] = *get_parameter(p, names_[i]);
  return v;
}

Eigen::VectorXd ParameterTransform::to_unconstrained(const ModelParams& p) const {
  const Eigen::VectorXd v = natural_values(p);
  Eigen::VectorXd u(v.size());
  double retention = alpha_budget_;
  for (std::size_t i : simplex_) retention -= v[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    switch (kinds_[i]) {
      case Kind::Identity: u[k] = v[k]; break;
      case Kind::Log:
        if (!(v[k] > 0.0)) throw Error(ErrorKind::Domain, names_[i] + " must be > 0");
        u[k] = std::log(v[k]);
        break;
      case Kind::Simplex:
        if (!(v[k] > 0.0) || !(retention > 0.0))
          throw Error(ErrorKind::Domain, names_[i] + " lies on the boundary of the weight simplex");
        u[k] = std::log(v[k] / retention);
        break;
    }
  }
  return u;
}

ModelParams ParameterTransform::to_natural(const Eigen::VectorXd& u) const {
  ModelParams p = base_;
  double shift = 0.0;
  for (std::size_t i : simplex_) shift = std::max(shift, u[static_cast<Eigen::Index>(i)]);
  double denom = std::exp(-shift);
  for (std::size_t i : simplex_) denom += std::exp(u[static_cast<Eigen::Index>(i)] - shift);
  for (std::size_t i = 0; i < size(); ++i) {
    const double x = u[static_cast<Eigen::Index>(i)];
    double value = x;
    if (kinds_[i] == Kind::Log) value = std::exp(x);
    if (kinds_[i] == Kind::Simplex) value = alpha_budget_ * std::exp(x - shift) / denom;
    set_parameter(p, names_[i], value);
  }
  return p;
}

Eigen::MatrixXd ParameterTransform::jacobian(const Eigen::VectorXd& u) const {
  const Eigen::Index n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  const Eigen::VectorXd v = natural_values(to_natural(u));
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity: jac(i, i) = 1.0; break;
      case Kind::Log: jac(i, i) = v[i]; break;
      case Kind::Simplex:
        for (std::size_t k : simplex_) {
          const auto kk = static_cast<Eigen::Index>(k);
          jac(i, kk) = v[i] * ((i == kk ? 1.0 : 0.0) - v[kk] / alpha_budget_);
        }
        break;
    }
  }
  return jac;
}

// ---------------------------------------------------------------- likelihood

LikelihoodModel::LikelihoodModel(const DecisionLog& log, const ModelParams& reference) {
  for (const auto& c : reference.beta) beta_names_.push_back(c.name);
  for (const auto& [kind, m] : reference.signal_maps) transforms_[kind] = m.transform;
  if (log.histories.size() != log.profiles.size())
    throw Error(ErrorKind::Data, "decision log has mismatched profiles and histories");

  applicants_.reserve(log.profiles.size());
  for (std::size_t i = 0; i < log.profiles.size(); ++i) {
    const ApplicantProfile& prof = log.profiles[i];
    Applicant a;
    a.male = prof.is_male();
    for (const auto& [name, v] : prof.covariates)
      if (reference.find_beta(name) == nullptr)
        throw Error(ErrorKind::Config, "no beta coefficient for covariate '" + name + "'");
    for (const auto& name : beta_names_) {
      const auto it = prof.covariates.find(name);
      if (it == prof.covariates.end())
        throw Error(ErrorKind::Config, "applicant " + prof.id + " lacks covariate '" + name + "'");
      a.x.push_back(it->second);
    }
    const auto& hist = log.histories[i];
    for (std::size_t k = 0; k < hist.size(); ++k) {
      Record r;
      r.a = hist[k].terms.gain_if_repaid;
      r.b = hist[k].terms.loss_if_default;
      r.approved = hist[k].approved;
      if (k > 0 && hist[k - 1].approved) {
        if (!hist[k - 1].signals)
          throw Error(ErrorKind::Data, "applicant " + prof.id + " application " +
                                           std::to_string(k) + " was approved but has no signals");
        r.update = true;
        r.raw = *hist[k - 1].signals;
        for (const auto& [kind, tr] : transforms_)
          r.signal[static_cast<std::size_t>(kind)] = apply_transform(tr, r.raw.value(kind));
      }
      a.records.push_back(r);
      ++n_obs_;
    }
    applicants_.push_back(std::move(a));
  }
}

void LikelihoodModel::check_layout(const ModelParams& params) const {
  if (params.beta.size() != beta_names_.size())
    throw Error(ErrorKind::Config, "parameter layout differs from the compiled likelihood");
  for (std::size_t k = 0; k < beta_names_.size(); ++k)
    if (params.beta[k].name != beta_names_[k])
      throw Error(ErrorKind::Config, "parameter layout differs from the compiled likelihood");
  if (params.signal_maps.size() != transforms_.size())
    throw Error(ErrorKind::Config, "signal maps differ from the compiled likelihood");
  for (const auto& [kind, m] : params.signal_maps) {
    const auto it = transforms_.find(kind);
    if (it == transforms_.end() || it->second != m.transform)
      throw Error(ErrorKind::Config, "signal maps differ from the compiled likelihood");
  }
}

double LikelihoodModel::applicant_value(const Applicant& a, const ModelParams& params) const {
  double q = a.male ? params.beta_male : 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) q += params.beta[k].value * a.x[k];
  BeliefState belief{q, params.sigma_q0 * params.sigma_q0};
  const Gender g = a.male ? Gender::Male : Gender::Female;
  double total = 0.0;
  for (const Record& r : a.records) {
    if (r.update) belief = advance_belief(belief, r.raw, params);
    const double p = non_default_prob(belief);
    const double v = params.z * (p * r.a - (1.0 - p) * r.b) - (g == Gender::Male ? params.c_male : 0.0);
    total += decision_term(v, r.approved, params.shock).first;
  }
  return total;
}

double LikelihoodModel::applicant_gradient(const Applicant& a, const ModelParams& params,
                                           std::vector<double>& grad) const {
  const std::size_t K = params.beta.size();
  const std::size_t i_bm = K, i_c = K + 1, i_z = K + 2, i_maps = K + 3;
  const std::size_t P = grad.size();
  std::vector<double> dq(P, 0.0);
  double q = a.male ? params.beta_male : 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    q += params.beta[k].value * a.x[k];
    dq[k] = a.x[k];
  }
  if (a.male) dq[i_bm] = 1.0;
  const double retention = 1.0 - params.weight_sum();
  const double male = a.male ? 1.0 : 0.0;

  double total = 0.0;
  for (const Record& r : a.records) {
    if (r.update) {
      double next = retention * q;
      for (double& d : dq) d *= retention;
      std::size_t j = 0;
      for (const auto& [kind, m] : params.signal_maps) {
        const std::size_t idx = i_maps + 3 * j++;
        const double e = (r.signal[static_cast<std::size_t>(kind)] - m.intercept) / m.slope;
        next += m.weight * e;
        dq[idx] += -m.weight * e / m.slope;
        dq[idx + 1] += -m.weight / m.slope;
        dq[idx + 2] += e - q;
      }
      q = next;
    }
    const double p = logistic(q);
    const double spread = r.a + r.b;
    const double v = params.z * (p * spread - r.b) - male * params.c_male;
    const auto [ll, dv] = decision_term(v, r.approved, params.shock);
    total += ll;
    if (dv == 0.0) continue;
    const double dvdq = params.z * spread * p * (1.0 - p);
    for (std::size_t i = 0; i < P; ++i) grad[i] += dv * dvdq * dq[i];
    grad[i_z] += dv * (p * spread - r.b);
    grad[i_c] += -dv * male;
  }
  return total;
}

double LikelihoodModel::value(const ModelParams& params) const {
  check_layout(params);
  params.validate();
  const std::size_t n = applicants_.size();
  std::vector<double> parts((n + kChunk - 1) / kChunk, 0.0);
  parallel_chunks(n, kChunk, [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += applicant_value(applicants_[i], params);
    parts[begin / kChunk] = s;
  });
  return pairwise_sum(parts);
}

std::vector<double> LikelihoodModel::per_applicant(const ModelParams& params) const {
  check_layout(params);
  params.validate();
  std::vector<double> out(applicants_.size(), 0.0);
  parallel_chunks(out.size(), kChunk, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = applicant_value(applicants_[i], params);
  });
  return out;
}

double LikelihoodModel::value_and_gradient(const ModelParams& params,
                                           std::vector<double>& grad) const {
  check_layout(params);
  params.validate();
  if (params.updater != Updater::WeightedSum)
    throw Error(ErrorKind::Config, "analytic gradient needs the weighted-sum updater");
  const std::size_t P = parameter_names(params).size();
  const std::size_t n = applicants_.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> values(chunks, 0.0);
  std::vector<std::vector<double>> grads(chunks, std::vector<double>(P, 0.0));
  parallel_chunks(n, kChunk, [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    auto& g = grads[begin / kChunk];
    for (std::size_t i = begin; i < end; ++i) s += applicant_gradient(applicants_[i], params, g);
    values[begin / kChunk] = s;
  });
  grad = chunks == 0 ? std::vector<double>(P, 0.0) : pairwise_sum(grads);
  return pairwise_sum(values);
}

std::vector<std::vector<double>> LikelihoodModel::per_applicant_gradients(
    const ModelParams& params) const {
  check_layout(params);
  params.validate();
  if (params.updater != Updater::WeightedSum)
    throw Error(ErrorKind::Config, "analytic gradient needs the weighted-sum updater");
  const std::size_t P = parameter_names(params).size();
  std::vector<std::vector<double>> out(applicants_.size(), std::vector<double>(P, 0.0));
  parallel_chunks(out.size(), kChunk, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) applicant_gradient(applicants_[i], params, out[i]);
  });
  return out;
}

double log_likelihood(const DecisionLog& log, const ModelParams& params) {
  return LikelihoodModel(log, params).value(params);
}

// ---------------------------------------------------------------- problem

namespace {

// Log-likelihood as a function of the transformed free parameters.
class Problem {
 public:
  Problem(const LikelihoodModel& model, const ParameterTransform& tr, const ModelParams& base)
      : model_(model), tr_(tr), analytic_(base.updater == Updater::WeightedSum) {
    const auto all = parameter_names(base);
    for (const auto& n : tr.names())
      index_.push_back(static_cast<std::size_t>(std::find(all.begin(), all.end(), n) - all.begin()));
  }

  double value(const Eigen::VectorXd& u) const { return model_.value(tr_.to_natural(u)); }

  Eigen::VectorXd gradient(const Eigen::VectorXd& u, double* value_out = nullptr) const {
    if (!analytic_) {
      if (value_out) *value_out = value(u);
      return fd_gradient(u);
    }
    std::vector<double> full;
    const double v = model_.value_and_gradient(tr_.to_natural(u), full);
    if (value_out) *value_out = v;
    return tr_.jacobian(u).transpose() * pick(full);
  }

  Eigen::VectorXd fd_gradient(const Eigen::VectorXd& u) const {
    Eigen::VectorXd g(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u[j]));
      Eigen::VectorXd up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      g[j] = (value(up) - value(dn)) / (2.0 * h);
    }
    return g;
  }

  // Rows are applicants.
  Eigen::MatrixXd scores(const Eigen::VectorXd& u) const {
    const Eigen::Index k = u.size();
    const auto n = static_cast<Eigen::Index>(model_.n_applicants());
    Eigen::MatrixXd s(n, k);
    if (analytic_) {
      const auto rows = model_.per_applicant_gradients(tr_.to_natural(u));
      const Eigen::MatrixXd jt = tr_.jacobian(u).transpose();
      for (Eigen::Index i = 0; i < n; ++i)
        s.row(i) = (jt * pick(rows[static_cast<std::size_t>(i)])).transpose();
      return s;
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u[j]));
      Eigen::VectorXd up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const auto a = model_.per_applicant(tr_.to_natural(up));
      const auto b = model_.per_applicant(tr_.to_natural(dn));
      for (Eigen::Index i = 0; i < n; ++i)
        s(i, j) = (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
    return s;
  }

 private:
  Eigen::VectorXd pick(const std::vector<double>& full) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(index_.size()));
    for (std::size_t i = 0; i < index_.size(); ++i) g[static_cast<Eigen::Index>(i)] = full[index_[i]];
    return g;
  }

  const LikelihoodModel& model_;
  const ParameterTransform& tr_;
  bool analytic_;
  std::vector<std::size_t> index_;
};

ModelParams perturbed_start(const EstimationConfig& config, int start) {
  ModelParams p = config.initial;
  if (start == 0) return p;
  StreamRng rng(config.seed, static_cast<std::uint64_t>(start), 0, StreamTag::Multistart);
  double frozen_alpha = 0.0, free_alpha = 0.0;
  for (const auto& name : config.free_params) {
    const double v = *get_parameter(p, name);
    const double factor = 1.0 + config.perturbation * (2.0 * rng.uniform() - 1.0);
    set_parameter(p, name, v * factor);
  }
  for (const auto& [kind, m] : p.signal_maps) {
    const std::string name = "alpha." + std::string(to_string(kind));
    const bool is_free =
        std::find(config.free_params.begin(), config.free_params.end(), name) != config.free_params.end();
    (is_free ? free_alpha : frozen_alpha) += m.weight;
  }
  const double budget = 1.0 - frozen_alpha;
  if (free_alpha >= budget && free_alpha > 0.0) {
    const double scale = 0.999 * budget / free_alpha;
    for (auto& [kind, m] : p.signal_maps) {
      const std::string name = "alpha." + std::string(to_string(kind));
      if (std::find(config.free_params.begin(), config.free_params.end(), name) !=
          config.free_params.end())
        m.weight *= scale;
    }
  }
  return p;
}

// Observed information (negative Hessian of the total log-likelihood) by
// central differences of the gradient.
Eigen::MatrixXd observed_information(const Problem& problem, const Eigen::VectorXd& u) {
  const Eigen::Index k = u.size();
  Eigen::MatrixXd info(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double h = 1e-4 * (1.0 + std::abs(u[j]));
    Eigen::VectorXd up = u, dn = u;
    up[j] += h;
    dn[j] -= h;
    info.col(j) = -(problem.gradient(up) - problem.gradient(dn)) / (2.0 * h);
  }
  return 0.5 * (info + info.transpose());
}

// Newton steps with step halving. Quasi-Newton progress stalls on badly
// scaled problems long before the gradient threshold is met.
bool newton_polish(const Problem& problem, Eigen::VectorXd& u, double& ll, double n, double tol) {
  for (int iter = 0; iter < 30; ++iter) {
    const Eigen::VectorXd g = problem.gradient(u);
    if (g.norm() / n <= tol) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(observed_information(problem, u));
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) return false;
    const Eigen::VectorXd step =
        eig.eigenvectors() *
        (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * g));
    bool moved = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      const Eigen::VectorXd cand = u + t * step;
      double v = -std::numeric_limits<double>::infinity();
      try {
        v = problem.value(cand);
      } catch (const Error&) {
      }
      if (v >= ll) {
        u = cand;
        ll = v;
        moved = true;
        break;
      }
    }
    if (!moved) return problem.gradient(u).norm() / n <= tol;
  }
  return problem.gradient(u).norm() / n <= tol;
}

// Covariance of the transformed parameters, or a diagnostic.
std::optional<Eigen::MatrixXd> invert_information(const Eigen::MatrixXd& info, std::string& diag) {
  if (!info.allFinite()) {
    diag = "information matrix is not finite";
    return std::nullopt;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double top = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.minCoeff() <= 1e-10 * top) {
    diag = "information matrix is singular or indefinite (min eigenvalue " +
           std::to_string(lam.minCoeff()) + ")";
    return std::nullopt;
  }
  return eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::map<std::string, double> log_likelihood_gradient(const DecisionLog& log,
                                                      const ModelParams& params,
                                                      const std::vector<std::string>& free_params) {
  const LikelihoodModel model(log, params);
  const ParameterTransform tr(params, free_params);
  const Problem problem(model, tr, params);
  const Eigen::VectorXd g = problem.gradient(tr.to_unconstrained(params));
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double v = g[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(v))
      throw Error(ErrorKind::Numerical, "non-finite gradient for parameter " + tr.names()[i]);
    out[tr.names()[i]] = v;
  }
  return out;
}

// ---------------------------------------------------------------- fit

EstimateReport fit(const DecisionLog& log, const EstimationConfig& config) {
  config.validate();
  if (log.application_count() == 0) throw Error(ErrorKind::Data, "decision log is empty");
  const LikelihoodModel model(log, config.initial);
  const ParameterTransform tr(config.initial, config.free_params);
  const Problem problem(model, tr, config.initial);
  const double n = static_cast<double>(model.n_observations());

  Objective obj;
  obj.value = [&](const Eigen::VectorXd& u) { return -problem.value(u) / n; };
  obj.value_and_gradient = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    double v = 0.0;
    g = -problem.gradient(u, &v) / n;
    return -v / n;
  };
  MinimizeOptions opts;
  opts.max_iters = config.max_iters;
  opts.grad_tol = config.tol;

  EstimateReport report;
  report.free_params = config.free_params;
  report.n_observations = model.n_observations();
  Eigen::VectorXd best_u;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool best_conv = false;

  for (int s = 0; s < config.multistart; ++s) {
    StartSummary summary;
    Eigen::VectorXd u0;
    try {
      u0 = tr.to_unconstrained(perturbed_start(config, s));
      summary.initial_loglik = problem.value(u0);
    } catch (const Error&) {
      summary.initial_loglik = -std::numeric_limits<double>::infinity();
      summary.final_loglik = summary.initial_loglik;
      report.starts.push_back(summary);
      continue;
    }
    const MinimizeResult r = config.optimizer == OptimizerKind::QuasiNewton
                                 ? minimize_bfgs(obj, u0, opts)
                                 : minimize_nelder_mead(obj, u0, opts);
    Eigen::VectorXd u = r.x;
    double ll = -std::numeric_limits<double>::infinity();
    try {
      ll = problem.value(u);
    } catch (const Error&) {
    }
    if (!(ll >= summary.initial_loglik)) {
      u = u0;
      ll = summary.initial_loglik;
    }
    bool converged = r.converged;
    if (config.optimizer == OptimizerKind::QuasiNewton && !converged)
      converged = newton_polish(problem, u, ll, n, config.tol);
    summary.final_loglik = ll;
    summary.converged = converged;
    summary.iterations = r.iterations;
    report.starts.push_back(summary);
    if (ll > best_ll) {
      best_ll = ll;
      best_u = u;
      best_conv = converged;
    }
  }
  if (best_u.size() == 0)
    throw Error(ErrorKind::Domain, "no multistart point has a finite log-likelihood");

  report.point_estimates = tr.to_natural(best_u);
  report.log_likelihood = best_ll;
  const Eigen::VectorXd g = problem.gradient(best_u);
  report.gradient_norm_at_optimum = g.norm() / n;
  report.converged = best_conv && report.gradient_norm_at_optimum <= config.tol;
  if (config.optimizer == OptimizerKind::NelderMead) report.converged = best_conv;
  if (!report.converged) report.diagnostic = "optimizer did not converge";

  // Standard errors in the transformed space, mapped back by the delta method.
  const Eigen::MatrixXd info = [&] {
    if (config.se_method == SeMethod::HessianInverse) return observed_information(problem, best_u);
    const Eigen::MatrixXd s = problem.scores(best_u);
    return Eigen::MatrixXd(s.transpose() * s);
  }();
  std::string diag;
  if (const auto cov_u = invert_information(info, diag)) {
    const Eigen::MatrixXd jac = tr.jacobian(best_u);
    const Eigen::MatrixXd cov = jac * *cov_u * jac.transpose();
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      report.std_errors[tr.names()[i]] = std::sqrt(std::max(0.0, cov(ii, ii)));
    }
  } else {
    report.diagnostic += (report.diagnostic.empty() ? "" : "; ") + diag;
  }
  return report;
}

Json to_json(const EstimateReport& r) {
  Json se = Json::object();
  for (const auto& [name, v] : r.std_errors) se[name] = v;
  Json starts = Json::array();
  for (const auto& s : r.starts)
    starts.push_back({{"initial_loglik", s.initial_loglik},
                      {"final_loglik", s.final_loglik},
                      {"converged", s.converged},
                      {"iterations", s.iterations}});
  return {{"estimates", params_to_json(r.point_estimates)},
          {"std_errors", se},
          {"loglik", r.log_likelihood},
          {"converged", r.converged},
          {"grad_norm", r.gradient_norm_at_optimum},
          {"n_obs", r.n_observations},
          {"free_params", r.free_params},
          {"diagnostic", r.diagnostic},
          {"starts", starts}};
}

}  // namespace biasforge
