#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/kernels.hpp"
#include "ipgp/observations.hpp"

namespace ipgp {

/// Dense-algebra guard on d*N*M*L.
inline constexpr Eigen::Index kDefaultRowCap = 6000;

/// Everything the marginal likelihood depends on besides the data.
struct GpParams {
  NonCollectiveForce force;
  MaternKernel kernel;
  double sigma;
};

/// Distinct unordered agent pairs of every snapshot plus the sparse
/// direction matrix R (rows x pairs). Column p of R carries u_ik in agent
/// i's rows and -u_ik in agent k's rows, so the interaction force field is
/// f = R phi(r) / N and its covariance is K_ff = R G R^T / N^2 with G the
/// kernel Gram matrix over pair distances.
///
/// Distances are always between positions; u is the position or velocity
/// difference depending on the observation set's interaction variable.
class PairBasis {
 public:
  explicit PairBasis(const ObservationSet& obs, Eigen::Index row_cap = kDefaultRowCap);

  const std::vector<double>& distances() const { return distances_; }
  const Eigen::SparseMatrix<double>& directions() const { return directions_; }
  Eigen::Index rows() const { return directions_.rows(); }
  Eigen::Index pairs() const { return directions_.cols(); }
  int agents() const { return n_; }

  Eigen::MatrixXd gram(const MaternKernel& kernel) const;
  void gram_with_dlog_omega(const MaternKernel& kernel, Eigen::MatrixXd& g,
                            Eigen::MatrixXd& dg) const;
  /// K(r_p, r_star) for every pair p.
  Eigen::VectorXd cross_gram(const MaternKernel& kernel, double r_star) const;
  /// R G R^T / N^2
  Eigen::MatrixXd covariance(const Eigen::MatrixXd& gram) const;

 private:
  int n_;
  std::vector<double> distances_;
  Eigen::SparseMatrix<double> directions_;
};

Eigen::MatrixXd assemble_ff_cov(const ObservationSet& obs, const MaternKernel& kernel,
                                Eigen::Index row_cap = kDefaultRowCap);
Eigen::VectorXd assemble_cross_cov(const ObservationSet& obs, const MaternKernel& kernel,
                                   double r_star);

/// Stacked observations Z: velocities (first order) or m_i * accelerations.
Eigen::VectorXd stacked_targets(const ObservationSet& obs);
/// Stacked non-collective force F_alpha(Y) and its parameter Jacobian.
Eigen::VectorXd stacked_force(const ObservationSet& obs, const NonCollectiveForce& force);
Eigen::MatrixXd stacked_force_jacobian(const ObservationSet& obs, const NonCollectiveForce& force);

/// Gradient entries ordered (alpha..., log s, log omega, log sigma).
struct NllGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Binds one observation set so repeated likelihood evaluations reuse its
/// pair geometry.
class GpObjective {
 public:
  explicit GpObjective(const ObservationSet& obs, Eigen::Index row_cap = kDefaultRowCap);

  double nll(const GpParams& params) const;
  NllGradient nll_grad(const GpParams& params) const;

  const ObservationSet& observations() const { return *obs_; }
  const std::shared_ptr<const PairBasis>& basis() const { return basis_; }

 private:
  std::shared_ptr<const ObservationSet> obs_;
  std::shared_ptr<const PairBasis> basis_;
  Eigen::VectorXd targets_;
};

double nll(const ObservationSet& obs, const GpParams& params);
NllGradient nll_grad(const ObservationSet& obs, const GpParams& params);

/// Jitter values tried in order when factorizing K_ff + sigma^2 I.
const std::vector<double>& jitter_ladder();

/// Cholesky of `c` with the jitter ladder; the jitter that succeeded is
/// written to `jitter`. Throws NumericError with the smallest eigenvalue
/// when every rung fails.
Eigen::LLT<Eigen::MatrixXd> factorize_with_jitter(const Eigen::MatrixXd& c, double& jitter);

struct PosteriorPoint {
  double mean;
  double variance;
};

/// Factorized covariance plus the solved residual; answers posterior
/// queries for phi. Immutable after build, shareable across threads.
class CovarianceCache {
 public:
  static CovarianceCache build(const ObservationSet& obs, const GpParams& params,
                               Eigen::Index row_cap = kDefaultRowCap);

  const Eigen::MatrixXd& k_ff() const { return k_ff_; }
  Eigen::MatrixXd chol() const { return llt_.matrixL(); }
  const Eigen::VectorXd& residual() const { return residual_; }
  const Eigen::VectorXd& alpha_vec() const { return alpha_vec_; }
  /// Representer weights c = R^T alpha_vec / N, so mean(r) = sum_p c_p K(r_p, r).
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const PairBasis& basis() const { return *basis_; }
  const MaternKernel& kernel() const { return kernel_; }
  double jitter() const { return jitter_; }
  double sigma() const { return sigma_; }
  const std::string& fingerprint() const { return fingerprint_; }

  double posterior_mean(double r_star) const;
  /// Unclipped: round-off can leave the variance slightly negative.
  PosteriorPoint posterior(double r_star) const;

 private:
  CovarianceCache(std::shared_ptr<const PairBasis> basis, MaternKernel kernel)
      : basis_(std::move(basis)), kernel_(kernel) {}

  std::shared_ptr<const PairBasis> basis_;
  MaternKernel kernel_;
  double sigma_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd k_ff_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd alpha_vec_;
  Eigen::VectorXd coefficients_;
  std::string fingerprint_;
};

/// Fingerprint tying a cache to its data and prior.
std::string cache_fingerprint(const ObservationSet& obs, const MaternKernel& kernel);

/// Posterior mean and variance of phi(r_star). Throws ContractError when
/// the cache was built for different data or prior.
PosteriorPoint posterior_phi(const CovarianceCache& cache, const ObservationSet& obs,
                             const MaternKernel& kernel, double r_star);

}  // namespace ipgp
