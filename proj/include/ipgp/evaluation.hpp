#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/training.hpp"

namespace ipgp {

/// Posterior curve of phi with a two-standard-deviation band.
struct KernelEstimate {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> variance;
  int clipped = 0;  // variances below zero that were clipped

  double sd(std::size_t k) const;
  double lo(std::size_t k) const { return mean[k] - 2.0 * sd(k); }
  double hi(std::size_t k) const { return mean[k] + 2.0 * sd(k); }
};

/// Pointwise posterior over `grid`, which must be increasing and lie in
/// [0, max_r]. Variances below zero are clipped and counted.
KernelEstimate estimate_kernel_curve(const TrainedModel& model, const ObservationSet& obs,
                                     const std::vector<double>& grid,
                                     double max_r = std::numeric_limits<double>::infinity());

/// Writes "r,mean,sd,lo,hi".
void write_kernel_csv(std::ostream& out, const KernelEstimate& est);

/// Histogram of pairwise distances along noise-free trajectories.
struct EmpiricalMeasure {
  std::vector<double> edges;      // bins + 1 uniform edges on [0, R]
  std::vector<double> rho;        // probability mass per bin
  std::vector<double> rho_tilde;  // r^2-weighted, normalized mass per bin
  long samples = 0;
  int failed_trajectories = 0;  // skipped after integration failures

  double r_max() const { return edges.back(); }
  std::vector<double> centers() const;
};

/// Simulates n_traj trajectories from spec.mu0 (stream "rho" of `seed`) and
/// histograms all N(N-1)/2 distances at L equispaced times on [0, T].
EmpiricalMeasure empirical_rho(const ParticleSystemSpec& spec, int n_traj, int l, double t_end,
                               int bins = 200, std::uint64_t seed = 0,
                               const IntegratorOptions& options = {}, int threads = 1);

struct KernelErrors {
  double rel_linf;
  double rel_l2_rho_tilde;
};

/// Relative sup-norm error over the estimate's grid points in [0, R] and
/// relative L2(rho_tilde) error by bin-centre quadrature (the estimate is
/// interpolated linearly). Throws NumericError when phi vanishes on the
/// support, where relative errors are undefined.
KernelErrors error_metrics(const KernelEstimate& est, const RadialFunction& true_phi,
                           const EmpiricalMeasure& rho);

/// sup over grid times in [t0, t1] of the Euclidean distance between the
/// position vectors.
double trajectory_error(const std::vector<State>& truth, const std::vector<State>& pred,
                        double t0 = -std::numeric_limits<double>::infinity(),
                        double t1 = std::numeric_limits<double>::infinity());

struct FlockingScore {
  Eigen::VectorXd direction;
  double score = 0.0;
  bool degenerate = false;  // top eigenvalue tied; direction taken from agent 0
};

/// Dominant direction of the unit velocities and the mean alignment with it.
FlockingScore flocking_score(const Eigen::VectorXd& velocities, int d);

/// Posterior mean of phi tabulated on [0, r_table] and interpolated with a
/// monotone cubic; exact representer evaluation beyond the table.
RadialFunction fast_kernel(const CovarianceCache& cache, double r_table, int points = 1000);

/// The learned system: fitted force plus the fast posterior-mean kernel.
ParticleSystemSpec learned_system(const TrainedModel& model, const ParticleSystemSpec& truth,
                                  double r_table);

struct PredictionReport {
  std::vector<double> train_errors;   // per initial condition, [0, T]
  std::vector<double> future_errors;  // per initial condition, [T, T_f]
  double mean_train_error = 0.0;
  double mean_future_error = 0.0;
  std::optional<KernelErrors> kernel;
  /// Mean flocking score of the predicted velocities at T_f (second order).
  std::optional<double> final_flocking;
  std::optional<double> true_final_flocking;
};

struct PredictionOptions {
  double t_end = 1.0;
  double t_future = 1.0;
  int samples = 201;  // comparison times on [0, T_f]
  IntegratorOptions integrator;
  int threads = 1;
};

/// Integrates truth and learned system from each initial condition and
/// compares positions on [0, T] and [T, T_f]. Kernel errors are added when
/// a measure is supplied.
PredictionReport predict_and_score(const TrainedModel& model, const ParticleSystemSpec& truth,
                                   const std::vector<State>& initial, const PredictionOptions& options,
                                   const EmpiricalMeasure* rho = nullptr,
                                   const ObservationSet* obs = nullptr);

std::string prediction_report_json(const PredictionReport& report);

}  // namespace ipgp
