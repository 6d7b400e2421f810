#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/evaluation.hpp"
#include "ipgp/gp_core.hpp"
#include "ipgp/kernels.hpp"
#include "ipgp/observations.hpp"

namespace ipgp {

/// Kernel ridge regression estimator phi(r) = sum_q c_q K(r_q, r) over
/// the M*L*N^2 ordered pair distances of the data (diagonal pairs included;
/// their coefficients are zero).
struct KrrSolution {
  double lambda = 0.0;
  MaternKernel kernel{Smoothness::ThreeHalves, 1.0, 1.0};
  std::vector<double> distances;
  Eigen::VectorXd coefficients;
  double jitter = 0.0;

  double operator()(double r) const;
};

/// Minimizer of (1/(MLN)) sum ||f_phi(X) - (Z - F(X))||^2 + lambda ||phi||_K^2,
/// c = (1/N) r_X^T (K_ff + lambda N M L I)^{-1} (Z - F). Throws InvalidInput
/// for lambda <= 0 and NumericError when the system stays singular.
KrrSolution krr_fit(const ObservationSet& obs, const MaternKernel& kernel, double lambda,
                    const NonCollectiveForce& force = NonCollectiveForce::zero(),
                    Eigen::Index row_cap = kDefaultRowCap);

/// The regularized risk that krr_fit minimizes, evaluated for an arbitrary
/// coefficient vector over the same ordered pairs.
double krr_objective(const ObservationSet& obs, const KrrSolution& solution,
                     const Eigen::VectorXd& coefficients,
                     const NonCollectiveForce& force = NonCollectiveForce::zero());

struct GpKrrReport {
  double max_discrepancy = 0.0;
  double krr_sup = 0.0;  // max |phi_KRR| over the grid
  double prior_amplitude = 0.0;

  double tolerance(double rel = 1e-8) const { return rel * std::max(1.0, krr_sup); }
};

/// Compares the GP posterior mean under the prior s~^2 = sigma^2 s^2 / (MNL lambda)
/// with the KRR estimator on `grid`. `mis_scaled` drops the 1/(MNL) factor,
/// which must break the agreement.
GpKrrReport check_gp_krr_equivalence(const ObservationSet& obs, const MaternKernel& kernel,
                                     double sigma, double lambda,
                                     const std::vector<double>& grid,
                                     const NonCollectiveForce& force = NonCollectiveForce::zero(),
                                     bool mis_scaled = false);

/// Small first-order system (N <= 5, d <= 2, M, L <= 3) with a random
/// kernel from the span of Matern functions, drawn from stream "theory".
ObservationSet seeded_instance(std::uint64_t seed, double sigma = 0.1);

struct CoercivityProbe {
  std::string description;
  double numerator = 0.0;    // ||f_phi||^2 with the 1/(LN)-weighted inner product
  double denominator = 0.0;  // ||phi||^2 in L2(rho_tilde)
  double ratio = 0.0;
  double standard_error = 0.0;
};

struct CoercivityReport {
  std::vector<CoercivityProbe> probes;
  std::vector<std::string> skipped;  // zero-norm probes
  double min_ratio = 0.0;
  double upper_bound = 0.0;  // (N-1)/N
  long samples = 0;
  int failed_trajectories = 0;
};

struct CoercivityOptions {
  int samples = 5000;
  int l = 1;
  double t_end = 0.0;
  int random_probes = 5;
  MaternKernel probe_kernel{Smoothness::ThreeHalves, 1.0, 0.5};
  std::uint64_t seed = 0;
  IntegratorOptions integrator;
};

/// Monte Carlo ratios ||f_phi||^2 / ||phi||^2_{L2(rho_tilde)} for the constant
/// probe, the system's own kernel and random Matern-span probes. Only
/// position-difference systems are supported.
CoercivityReport estimate_coercivity(const ParticleSystemSpec& spec,
                                     const CoercivityOptions& options,
                                     std::vector<std::pair<std::string, RadialFunction>> extra = {});

struct ConvergenceRow {
  int m = 0;
  double lambda = 0.0;
  std::vector<double> l2_errors;  // per seed, relative L2(rho_tilde)
  std::vector<double> linf_errors;
  double median_l2 = 0.0;
  double median_linf = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;  // least-squares log-log slope of median L2 vs M
  double r_max = 0.0;

  bool strictly_decreasing() const;
};

struct ConvergenceOptions {
  std::vector<int> m_list{4, 16, 64};
  int seeds = 5;
  double gamma = 0.5;        // lambda(M) = lambda_scale * M^{-1/(2 gamma + 1)}
  double lambda_scale = 1.0;
  int l = 3;
  double t_end = 1.0;
  double sigma = 0.1;
  int rho_trajectories = 2000;
  int bins = 200;
  int grid_points = 400;
  std::uint64_t seed = 0;
  int threads = 1;
  IntegratorOptions integrator;
};

/// First-order system with N = 5 agents on the line, no non-collective force
/// and a kernel in the span of the Matern kernel used for regression.
ParticleSystemSpec convergence_system();
/// Regression kernel for the study: same smoothness and length-scale as the
/// true kernel, amplitude 10 so that lambda = M^{-1/2} is not bias-dominated.
MaternKernel convergence_kernel();

ConvergenceStudy convergence_study(const ParticleSystemSpec& spec, const MaternKernel& kernel,
                                   const ConvergenceOptions& options);

std::string coercivity_report_json(const CoercivityReport& report);
std::string convergence_study_json(const ConvergenceStudy& study);

}  // namespace ipgp
