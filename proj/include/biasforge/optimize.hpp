#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace biasforge {

// Minimization problem over R^n. value_and_gradient may be empty for
// derivative-free methods.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_and_gradient;
};

struct MinimizeOptions {
  int max_iters = 500;
  double grad_tol = 1e-6;     // Euclidean gradient norm
  double initial_step = 0.1;  // first trial step (BFGS) or simplex edge (Nelder-Mead)
  double line_tol = 0.1;
  double simplex_tol = 1e-8;  // Nelder-Mead characteristic size
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

// Quasi-Newton (BFGS, GSL's bfgs2). Converged when the gradient norm at the
// returned point is below grad_tol.
MinimizeResult minimize_bfgs(const Objective& objective, const Eigen::VectorXd& x0,
                             const MinimizeOptions& options);

// Nelder-Mead simplex (GSL's nmsimplex2). Converged when the simplex size
// drops below simplex_tol.
MinimizeResult minimize_nelder_mead(const Objective& objective, const Eigen::VectorXd& x0,
                                    const MinimizeOptions& options);

}  // namespace biasforge
