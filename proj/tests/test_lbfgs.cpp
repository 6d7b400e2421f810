#include <doctest.h>

#include <cmath>
#include <limits>

#include "ipgp/lbfgs.hpp"

using namespace ipgp;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
  g.resize(2);
  g(0) = -2.0 * a - 400.0 * x(0) * b;
  g(1) = 200.0 * b;
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("L-BFGS solves the Rosenbrock valley") {
  const auto res = lbfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0));
  CHECK(res.converged);
  CHECK_FALSE(res.budget_exhausted);
  CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.gradient.lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(res.trace.front().iteration == 0);
  for (std::size_t k = 1; k < res.trace.size(); ++k) CHECK(res.trace[k].value <= res.trace[k - 1].value);
}

TEST_CASE("budget of zero returns the start untouched") {
  int calls = 0;
  const auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++calls;
    return rosenbrock(x, g);
  };
  LbfgsOptions opt;
  opt.max_evaluations = 0;
  const Eigen::Vector2d x0(-1.2, 1.0);
  const auto res = lbfgs_minimize(f, x0, opt);
  CHECK(calls == 0);
  CHECK(res.evaluations == 0);
  CHECK(res.x == x0);
  CHECK(res.budget_exhausted);
}

TEST_CASE("every objective call counts against the budget") {
  int calls = 0;
  const auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++calls;
    return rosenbrock(x, g);
  };
  LbfgsOptions opt;
  opt.max_evaluations = 7;
  const auto res = lbfgs_minimize(f, Eigen::Vector2d(-1.2, 1.0), opt);
  CHECK(calls <= 7);
  CHECK(res.evaluations == calls);
  CHECK(res.budget_exhausted);
  CHECK_FALSE(res.converged);
}

TEST_CASE("quadratic converges and the result sits at the minimizer") {
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Eigen::Vector3d b(1, -2, 0.5);
  const auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  };
  const auto res = lbfgs_minimize(f, Eigen::Vector3d::Zero());
  CHECK(res.converged);
  CHECK((res.x - a.ldlt().solve(b)).norm() < 1e-6);
}

TEST_CASE("infeasible trial points make the line search back off") {
  // Minimum at 2 lies behind a wall at 1.5.
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Zero(1);
    if (x(0) > 1.5) return std::numeric_limits<double>::infinity();
    g(0) = 2.0 * (x(0) - 2.0);
    return (x(0) - 2.0) * (x(0) - 2.0);
  };
  LbfgsOptions opt;
  opt.max_evaluations = 200;
  const auto res = lbfgs_minimize(f, Eigen::VectorXd::Zero(1), opt);
  CHECK(std::isfinite(res.value));
  CHECK(res.x(0) <= 1.5);
  CHECK(res.x(0) > 1.0);
  CHECK_FALSE(res.converged);
}
