#include "ipgp/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ipgp/errors.hpp"

namespace ipgp {

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (error weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double rtol, double atol) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < err.size(); ++k) {
    const double scale = atol + rtol * std::max(std::abs(y0(k)), std::abs(y1(k)));
    const double q = err(k) / scale;
    acc += q * q;
  }
  return err.size() ? std::sqrt(acc / static_cast<double>(err.size())) : 0.0;
}

}  // namespace

std::vector<double> linspace(double t0, double t1, int n) {
  if (n < 1) throw InvalidInput("linspace needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = t0;
    return out;
  }
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / (n - 1);
  out.back() = t1;
  return out;
}

std::vector<Eigen::VectorXd> integrate_ode(const OdeFunction& f, const Eigen::VectorXd& y0,
                                           std::span<const double> t_grid,
                                           const IntegratorOptions& opt) {
  if (t_grid.empty()) throw InvalidInput("integration grid is empty");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw InvalidInput("integration grid must be strictly increasing");
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw InvalidInput("tolerances must be positive");

  std::vector<Eigen::VectorXd> out;
  out.reserve(t_grid.size());
  out.push_back(y0);
  if (t_grid.size() == 1) return out;

  Eigen::VectorXd y = y0;
  double t = t_grid.front();
  Eigen::VectorXd k1 = f(t, y);

  // Initial step from the usual scale heuristic.
  double h;
  {
    Eigen::VectorXd scale = (opt.atol + opt.rtol * y.array().abs()).matrix();
    const double d0 = (y.array() / scale.array()).matrix().norm() / std::sqrt(std::max<double>(1, y.size()));
    const double d1 = (k1.array() / scale.array()).matrix().norm() / std::sqrt(std::max<double>(1, y.size()));
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, t_grid.back() - t);
  }
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  long steps = 0;
  Eigen::VectorXd k2, k3, k4, k5, k6, k7, y_new, err;
  for (std::size_t target = 1; target < t_grid.size(); ++target) {
    const double t_target = t_grid[target];
    while (t < t_target) {
      if (++steps > opt.max_steps) {
        std::ostringstream msg;
        msg << "integration exceeded " << opt.max_steps << " steps; last good time " << t;
        throw IntegrationFailure(msg.str(), t);
      }
      bool last = false;
      double step = h;
      if (t + step >= t_target - 1e-12 * std::max(1.0, std::abs(t_target))) {
        step = t_target - t;
        last = true;
      }
      k2 = f(t + c2 * step, y + step * (a21 * k1));
      k3 = f(t + c3 * step, y + step * (a31 * k1 + a32 * k2));
      k4 = f(t + c4 * step, y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(t + c5 * step, y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(t + step, y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = f(t + step, y_new);
      err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, y_new, opt.rtol, opt.atol);

      if (std::isfinite(en) && en <= 1.0) {
        t = last ? t_target : t + step;
        y = y_new;
        k1 = k7;  // FSAL
        const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        // A step shortened to land on the grid says nothing about the
        // admissible size, so only grow from full steps.
        h = last ? std::max(h, step * factor) : step * factor;
      } else {
        const double factor = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.1;
        h = step * factor;
        if (h < opt.min_step) {
          std::ostringstream msg;
          msg << "step size underflow at t = " << t;
          throw IntegrationFailure(msg.str(), t);
        }
      }
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    }
    out.push_back(y);
  }
  return out;
}

std::vector<State> integrate(const ParticleSystemSpec& spec, const State& initial,
                             std::span<const double> t_grid, const IntegratorOptions& options) {
  spec.validate();
  const Eigen::Index dim = static_cast<Eigen::Index>(spec.d) * spec.n;
  if (initial.x.size() != dim || (spec.order == Order::Second && initial.v.size() != dim))
    throw InvalidInput("initial state dimension does not match the system");

  std::vector<State> states;
  states.reserve(t_grid.size());
  if (spec.order == Order::First) {
    OdeFunction f = [&spec](double t, const Eigen::VectorXd& y) {
      State s{y, {}, t};
      return rhs(spec, s);
    };
    auto ys = integrate_ode(f, initial.x, t_grid, options);
    for (std::size_t k = 0; k < ys.size(); ++k) states.push_back({ys[k], {}, t_grid[k]});
  } else {
    OdeFunction f = [&spec, dim](double t, const Eigen::VectorXd& y) {
      State s{y.head(dim), y.tail(dim), t};
      Eigen::VectorXd dy(2 * dim);
      dy.head(dim) = s.v;
      dy.tail(dim) = rhs(spec, s);
      return dy;
    };
    Eigen::VectorXd y0(2 * dim);
    y0 << initial.x, initial.v;
    auto ys = integrate_ode(f, y0, t_grid, options);
    for (std::size_t k = 0; k < ys.size(); ++k)
      states.push_back({ys[k].head(dim), ys[k].tail(dim), t_grid[k]});
  }
  return states;
}

}  // namespace ipgp
