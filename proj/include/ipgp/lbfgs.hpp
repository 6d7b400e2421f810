#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ipgp {

/// f(x) with the gradient written to `grad`. Returning +inf marks x as
/// infeasible; the line search then backtracks toward the last good point.
using GradientObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_evaluations = 600;
  double gradient_tolerance = 1e-6;  // on the infinity norm
  int memory = 10;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_line_search = 25;
};

struct LbfgsIterate {
  int iteration;
  int evaluations;  // cumulative objective calls at acceptance
  double value;
  double gradient_norm;  // infinity norm
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;         // gradient tolerance met
  bool budget_exhausted = false;  // stopped on max_evaluations
  bool stalled = false;           // line search could not make progress
  std::string message;
  /// Accepted iterates, starting with the initial point.
  std::vector<LbfgsIterate> trace;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// cubic-interpolation zoom). Every objective call counts against the
/// budget; a budget of 0 returns x0 untouched.
LbfgsResult lbfgs_minimize(const GradientObjective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace ipgp
