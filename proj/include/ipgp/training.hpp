#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/gp_core.hpp"
#include "ipgp/kernels.hpp"
#include "ipgp/lbfgs.hpp"
#include "ipgp/observations.hpp"

namespace ipgp {

/// Structure of the system being learned; the force carries its family
/// and stubborn-agent layout, its parameter values are ignored.
struct Skeleton {
  int d = 1;
  int n = 2;
  Order order = Order::First;
  InteractionVariable interaction = InteractionVariable::PositionDifference;
  NonCollectiveForce force;
  Smoothness nu = Smoothness::ThreeHalves;

  /// Throws InvalidInput when the data disagree with this structure.
  void check(const ObservationSet& obs) const;
};

Skeleton skeleton_of(const ParticleSystemSpec& spec, Smoothness nu);

struct FitConfig {
  std::optional<Eigen::VectorXd> alpha0;  // default: 0.5 per component
  double s0 = 1.0;
  std::optional<double> omega0;  // default: R/4, R the largest observed distance
  double sigma0 = 0.1;
  int max_evaluations = 600;
  double gradient_tolerance = 1e-6;
  int memory = 10;
  int restarts = 1;
  std::uint64_t seed = 0;
  Eigen::Index row_cap = kDefaultRowCap;

  void validate() const;
};

struct TrainedModel {
  Skeleton skeleton;
  NonCollectiveForce force;  // fitted alpha
  MaternKernel kernel{Smoothness::ThreeHalves, 1.0, 1.0};
  double sigma = 0.0;
  double nll = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = 0.0;  // infinity norm at the result
  bool converged = false;
  bool budget_exhausted = false;
  bool stalled = false;
  int restart = 0;  // which restart produced the result
  std::vector<LbfgsIterate> trace;
  std::string data_hash;
  std::shared_ptr<const CovarianceCache> cache;

  GpParams params() const { return {force, kernel, sigma}; }
};

/// Adapter from packed vectors (alpha..., log s, log omega, log sigma) to
/// the likelihood. Remembers the last point; failures map to +inf.
class LineSearchObjective {
 public:
  LineSearchObjective(std::shared_ptr<const GpObjective> objective, Skeleton skeleton);

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad);

  GpParams unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(const GpParams& params) const;
  Eigen::Index size() const;
  /// Likelihood evaluations actually performed (cache hits excluded).
  int computations() const { return computations_; }
  int failures() const { return failures_; }

 private:
  std::shared_ptr<const GpObjective> objective_;
  Skeleton skeleton_;
  bool has_last_ = false;
  Eigen::VectorXd last_x_;
  double last_value_ = 0.0;
  Eigen::VectorXd last_grad_;
  int computations_ = 0;
  int failures_ = 0;
};

/// Largest pairwise distance over all snapshots.
double max_pair_distance(const ObservationSet& obs);

/// Minimizes the negative log marginal likelihood with L-BFGS; restarts
/// beyond the first start from jittered initial values drawn from the
/// "restart" stream of config.seed. The lowest final NLL wins.
TrainedModel fit(const ObservationSet& obs, const Skeleton& skeleton, const FitConfig& config);

std::string model_to_json(const TrainedModel& model);
/// Rebuilds the posterior cache from `obs`, whose hash must match the one
/// recorded in the model (ContractError otherwise).
TrainedModel model_from_json(const std::string& text, const ObservationSet& obs);

}  // namespace ipgp
