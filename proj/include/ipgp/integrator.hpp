#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "ipgp/dynamics.hpp"

namespace ipgp {

struct IntegratorOptions {
  double rtol = 1e-5;
  double atol = 1e-6;
  double min_step = 1e-12;
  double max_step = 0.0;  // 0: unbounded
  long max_steps = 2'000'000;
};

/// y' = f(t, y)
using OdeFunction = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Dormand-Prince 5(4) with error-per-step control. Steps are clipped so the
/// solution is produced exactly at every entry of t_grid (no interpolation).
/// The first grid point is the initial time.
std::vector<Eigen::VectorXd> integrate_ode(const OdeFunction& f, const Eigen::VectorXd& y0,
                                           std::span<const double> t_grid,
                                           const IntegratorOptions& options = {});

/// Integrates a particle system from `initial` (taken to be at t_grid[0]).
std::vector<State> integrate(const ParticleSystemSpec& spec, const State& initial,
                             std::span<const double> t_grid,
                             const IntegratorOptions& options = {});

/// n equispaced times from t0 to t1 inclusive (a single point is t0).
std::vector<double> linspace(double t0, double t1, int n);

}  // namespace ipgp
