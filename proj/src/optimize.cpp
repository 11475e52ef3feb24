#include "biasforge/optimize.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "biasforge/error.hpp"

namespace biasforge {
namespace {

// Returned for trial points where the objective is undefined.
constexpr double kRejectedValue = 1e300;

struct GslErrorsOff {
  GslErrorsOff() { gsl_set_error_handler_off(); }
};
const GslErrorsOff g_gsl_errors_off;

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using GslVector = std::unique_ptr<gsl_vector, VectorDeleter>;

GslVector to_gsl(const Eigen::VectorXd& x) {
  GslVector v(gsl_vector_alloc(static_cast<std::size_t>(x.size())));
  for (Eigen::Index i = 0; i < x.size(); ++i) gsl_vector_set(v.get(), static_cast<std::size_t>(i), x[i]);
  return v;
}

Eigen::VectorXd from_gsl(const gsl_vector* v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) x[static_cast<Eigen::Index>(i)] = gsl_vector_get(v, i);
  return x;
}

double safe_value(const Objective& obj, const Eigen::VectorXd& x) {
  try {
    const double f = obj.value(x);
    return std::isfinite(f) ? f : kRejectedValue;
  } catch (const Error&) {
    return kRejectedValue;
  }
}

double safe_value_and_gradient(const Objective& obj, const Eigen::VectorXd& x,
                               Eigen::VectorXd& g) {
  try {
    const double f = obj.value_and_gradient(x, g);
    if (std::isfinite(f) && g.allFinite()) return f;
  } catch (const Error&) {
  }
  g.setZero(x.size());
  return kRejectedValue;
}

double fdf_f(const gsl_vector* v, void* params) {
  return safe_value(*static_cast<const Objective*>(params), from_gsl(v));
}

void fdf_df(const gsl_vector* v, void* params, gsl_vector* df) {
  Eigen::VectorXd g;
  safe_value_and_gradient(*static_cast<const Objective*>(params), from_gsl(v), g);
  for (std::size_t i = 0; i < df->size; ++i) gsl_vector_set(df, i, g[static_cast<Eigen::Index>(i)]);
}

void fdf_fdf(const gsl_vector* v, void* params, double* f, gsl_vector* df) {
  Eigen::VectorXd g;
  *f = safe_value_and_gradient(*static_cast<const Objective*>(params), from_gsl(v), g);
  for (std::size_t i = 0; i < df->size; ++i) gsl_vector_set(df, i, g[static_cast<Eigen::Index>(i)]);
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& objective, const Eigen::VectorXd& x0,
                             const MinimizeOptions& options) {
  if (!objective.value_and_gradient)
    throw Error(ErrorKind::Config, "quasi-Newton minimization needs a gradient");
  const std::size_t n = static_cast<std::size_t>(x0.size());
  gsl_multimin_function_fdf fn;
  fn.n = n;
  fn.f = &fdf_f;
  fn.df = &fdf_df;
  fn.fdf = &fdf_fdf;
  fn.params = const_cast<Objective*>(&objective);

  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
      &gsl_multimin_fdfminimizer_free);
  GslVector start = to_gsl(x0);
  gsl_multimin_fdfminimizer_set(s.get(), &fn, start.get(), options.initial_step, options.line_tol);

  MinimizeResult result;
  result.status = "max_iters";
  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (gsl_blas_dnrm2(gsl_multimin_fdfminimizer_gradient(s.get())) < options.grad_tol) {
      result.converged = true;
      result.status = "gradient";
      break;
    }
    const int status = gsl_multimin_fdfminimizer_iterate(s.get());
    ++result.iterations;
    if (status != GSL_SUCCESS) {
      result.status = gsl_strerror(status);
      break;
    }
  }
  result.x = from_gsl(gsl_multimin_fdfminimizer_x(s.get()));
  result.f = gsl_multimin_fdfminimizer_minimum(s.get());
  if (!result.converged &&
      gsl_blas_dnrm2(gsl_multimin_fdfminimizer_gradient(s.get())) < options.grad_tol) {
    result.converged = true;
    result.status = "gradient";
  }
  return result;
}

MinimizeResult minimize_nelder_mead(const Objective& objective, const Eigen::VectorXd& x0,
                                    const MinimizeOptions& options) {
  const std::size_t n = static_cast<std::size_t>(x0.size());
  gsl_multimin_function fn;
  fn.n = n;
  fn.f = &fdf_f;
  fn.params = const_cast<Objective*>(&objective);

  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  GslVector start = to_gsl(x0);
  GslVector steps(gsl_vector_alloc(n));
  gsl_vector_set_all(steps.get(), options.initial_step);
  gsl_multimin_fminimizer_set(s.get(), &fn, start.get(), steps.get());

  MinimizeResult result;
  result.status = "max_iters";
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const int status = gsl_multimin_fminimizer_iterate(s.get());
    ++result.iterations;
    if (status != GSL_SUCCESS) {
      result.status = gsl_strerror(status);
      break;
    }
    if (gsl_multimin_fminimizer_size(s.get()) < options.simplex_tol) {
      result.converged = true;
      result.status = "simplex";
      break;
    }
  }
  result.x = from_gsl(gsl_multimin_fminimizer_x(s.get()));
  result.f = gsl_multimin_fminimizer_minimum(s.get());
  return result;
}

}  // namespace biasforge
