#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mcbd::optim {

struct LbfgsOptions {
  int memory = 10;
  /// Stop when ||grad||_inf <= grad_tol * max(1, |f|).
  double grad_tol = 1e-8;
  int max_iters = 500;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature (strong Wolfe)
  int max_line_search = 30;
};

enum class LbfgsStatus { GradientConverged, MaxIterations, LineSearchFailed };

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  /// Steps where the strong Wolfe search failed and a backtracking
  /// steepest-descent step was used instead.
  int fallback_steps = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  /// Objective after each accepted step, starting with f(x0).
  std::vector<double> accepted_values;
};

/// Returns f(x) and writes its gradient into grad (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

}  // namespace mcbd::optim
