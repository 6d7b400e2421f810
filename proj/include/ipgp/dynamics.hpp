#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ipgp/rng.hpp"

namespace ipgp {

enum class Order { First, Second };

/// What multiplies phi(r) in the pairwise term: x_j - x_i or v_j - v_i.
enum class InteractionVariable { PositionDifference, VelocityDifference };

std::string to_string(Order order);
std::string to_string(InteractionVariable var);
Order order_from_string(const std::string& name);
InteractionVariable interaction_from_string(const std::string& name);

/// Scalar interaction kernel r -> phi(r) on [0, inf).
using RadialFunction = std::function<double(double)>;

/// Positions (and velocities for second-order systems) of all agents,
/// agent-major: x(i*d + c) is coordinate c of agent i.
struct State {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  double t = 0.0;
};

/// Per-agent force that does not depend on the other agents.
///
/// For first-order systems the force acts directly on the velocity
/// (x_i' = F(x_i) + interaction); for second-order systems it enters
/// Newton's law next to the interaction term.  All free parameters are
/// exposed as one flat vector so the trainer can treat them uniformly.
class NonCollectiveForce {
 public:
  enum class Family { Zero, StubbornOpinion, SelfPropulsion, RayleighFriction };

  NonCollectiveForce() = default;

  static NonCollectiveForce zero();
  /// -kappa (x_i - P_k) for the k-th stubborn agent, zero for the others.
  static NonCollectiveForce stubborn(std::vector<double> biases, double kappa,
                                     std::vector<int> stubborn_agents);
  /// (gamma - beta |v_i|^2) v_i
  static NonCollectiveForce self_propulsion(double gamma, double beta);
  /// kappa v_i (1 - |v_i|^p)
  static NonCollectiveForce rayleigh(double kappa, double p);

  Family family() const { return family_; }
  const std::vector<int>& stubborn_agents() const { return stubborn_agents_; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<std::string> param_names() const;

  Eigen::VectorXd pack() const;
  /// Same family and structure with new parameter values.
  NonCollectiveForce unpack(const Eigen::VectorXd& params) const;

  /// Force on every agent, stacked as a d*N vector.
  Eigen::VectorXd evaluate(const State& state, int d) const;
  /// d*N x param_count() Jacobian of evaluate() with respect to pack().
  Eigen::MatrixXd param_jacobian(const State& state, int d) const;

  std::string family_name() const;

 private:
  Family family_ = Family::Zero;
  // stubborn: P_1..P_k then kappa; self-propulsion: gamma, beta;
  // rayleigh: kappa, p.
  std::vector<double> params_;
  std::vector<int> stubborn_agents_;
};

/// Independent uniform boxes for every position and velocity coordinate.
struct UniformBoxPrior {
  double position_lo = 0.0;
  double position_hi = 1.0;
  double velocity_lo = 0.0;
  double velocity_hi = 0.0;

  State sample(Rng& rng, int d, int n, Order order) const;
};

struct ParticleSystemSpec {
  int d = 1;
  int n = 2;
  Order order = Order::First;
  InteractionVariable interaction = InteractionVariable::PositionDifference;
  NonCollectiveForce force;
  RadialFunction kernel;
  std::vector<double> masses;  // empty means all ones
  UniformBoxPrior mu0;

  void validate() const;
  double mass(int agent) const {
    return masses.empty() ? 1.0 : masses[static_cast<std::size_t>(agent)];
  }
};

/// Velocities (first order) or accelerations (second order) of all agents.
Eigen::VectorXd rhs(const ParticleSystemSpec& spec, const State& state);

/// The pairwise part only: (1/N) sum_{j != i} phi(|x_j - x_i|) u_ij.
Eigen::VectorXd interaction_force(const ParticleSystemSpec& spec,
                                  const State& state);

}  // namespace ipgp
