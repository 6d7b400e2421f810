#include "ipgp/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "ipgp/errors.hpp"

namespace ipgp {

std::string to_string(Order order) {
  return order == Order::First ? "first" : "second";
}

std::string to_string(InteractionVariable var) {
  return var == InteractionVariable::PositionDifference ? "position" : "velocity";
}

Order order_from_string(const std::string& name) {
  if (name == "first") return Order::First;
  if (name == "second") return Order::Second;
  throw InvalidInput("unknown order '" + name + "' (expected first|second)");
}

InteractionVariable interaction_from_string(const std::string& name) {
  if (name == "position") return InteractionVariable::PositionDifference;
  if (name == "velocity") return InteractionVariable::VelocityDifference;
  throw InvalidInput("unknown interaction variable '" + name +
                     "' (expected position|velocity)");
}

NonCollectiveForce NonCollectiveForce::zero() { return {}; }

NonCollectiveForce NonCollectiveForce::stubborn(std::vector<double> biases,
                                                double kappa,
                                                std::vector<int> stubborn_agents) {
  if (biases.size() != stubborn_agents.size())
    throw InvalidInput("stubborn force: one bias per stubborn agent required");
  NonCollectiveForce f;
  f.family_ = Family::StubbornOpinion;
  f.params_ = std::move(biases);
  f.params_.push_back(kappa);
  f.stubborn_agents_ = std::move(stubborn_agents);
  return f;
}

NonCollectiveForce NonCollectiveForce::self_propulsion(double gamma, double beta) {
  NonCollectiveForce f;
  f.family_ = Family::SelfPropulsion;
  f.params_ = {gamma, beta};
  return f;
}

NonCollectiveForce NonCollectiveForce::rayleigh(double kappa, double p) {
  NonCollectiveForce f;
  f.family_ = Family::RayleighFriction;
  f.params_ = {kappa, p};
  return f;
}

std::string NonCollectiveForce::family_name() const {
  switch (family_) {
    case Family::Zero: return "zero";
    case Family::StubbornOpinion: return "stubborn";
    case Family::SelfPropulsion: return "self_propulsion";
    case Family::RayleighFriction: return "rayleigh";
  }
  return "zero";
}

std::vector<std::string> NonCollectiveForce::param_names() const {
  switch (family_) {
    case Family::Zero: return {};
    case Family::StubbornOpinion: {
      std::vector<std::string> names;
      for (std::size_t k = 0; k < stubborn_agents_.size(); ++k)
        names.push_back("P" + std::to_string(k + 1));
      names.emplace_back("kappa");
      return names;
    }
    case Family::SelfPropulsion: return {"gamma", "beta"};
    case Family::RayleighFriction: return {"kappa", "p"};
  }
  return {};
}

Eigen::VectorXd NonCollectiveForce::pack() const {
  return Eigen::Map<const Eigen::VectorXd>(params_.data(),
                                           static_cast<Eigen::Index>(params_.size()));
}

NonCollectiveForce NonCollectiveForce::unpack(const Eigen::VectorXd& params) const {
  if (static_cast<std::size_t>(params.size()) != params_.size())
    throw InvalidInput("force parameter vector has length " +
                       std::to_string(params.size()) + ", expected " +
                       std::to_string(params_.size()));
  NonCollectiveForce f = *this;
  f.params_.assign(params.data(), params.data() + params.size());
  return f;
}

Eigen::VectorXd NonCollectiveForce::evaluate(const State& state, int d) const {
  const Eigen::Index dim = state.x.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  switch (family_) {
    case Family::Zero:
      break;
    case Family::StubbornOpinion: {
      const double kappa = params_.back();
      for (std::size_t k = 0; k < stubborn_agents_.size(); ++k) {
        const Eigen::Index i = stubborn_agents_[k];
        for (int c = 0; c < d; ++c)
          out(i * d + c) = -kappa * (state.x(i * d + c) - params_[k]);
      }
      break;
    }
    case Family::SelfPropulsion: {
      const double gamma = params_[0], beta = params_[1];
      for (Eigen::Index i = 0; i < dim / d; ++i) {
        auto vi = state.v.segment(i * d, d);
        out.segment(i * d, d) = (gamma - beta * vi.squaredNorm()) * vi;
      }
      break;
    }
    case Family::RayleighFriction: {
      const double kappa = params_[0], p = params_[1];
      for (Eigen::Index i = 0; i < dim / d; ++i) {
        auto vi = state.v.segment(i * d, d);
        out.segment(i * d, d) = kappa * (1.0 - std::pow(vi.norm(), p)) * vi;
      }
      break;
    }
  }
  return out;
}

Eigen::MatrixXd NonCollectiveForce::param_jacobian(const State& state, int d) const {
  const Eigen::Index dim = state.x.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(params_.size()));
  switch (family_) {
    case Family::Zero:
      break;
    case Family::StubbornOpinion: {
      const double kappa = params_.back();
      const Eigen::Index kcol = static_cast<Eigen::Index>(params_.size()) - 1;
      for (std::size_t k = 0; k < stubborn_agents_.size(); ++k) {
        const Eigen::Index i = stubborn_agents_[k];
        for (int c = 0; c < d; ++c) {
          jac(i * d + c, static_cast<Eigen::Index>(k)) = kappa;
          jac(i * d + c, kcol) = -(state.x(i * d + c) - params_[k]);
        }
      }
      break;
    }
    case Family::SelfPropulsion:
      for (Eigen::Index i = 0; i < dim / d; ++i) {
        auto vi = state.v.segment(i * d, d);
        jac.block(i * d, 0, d, 1) = vi;
        jac.block(i * d, 1, d, 1) = -vi.squaredNorm() * vi;
      }
      break;
    case Family::RayleighFriction: {
      const double kappa = params_[0], p = params_[1];
      for (Eigen::Index i = 0; i < dim / d; ++i) {
        auto vi = state.v.segment(i * d, d);
        const double speed = vi.norm();
        const double sp = std::pow(speed, p);
        jac.block(i * d, 0, d, 1) = (1.0 - sp) * vi;
        // d/dp |v|^p = |v|^p log|v|, which tends to 0 as |v| -> 0
        const double dsp = speed > 0.0 ? sp * std::log(speed) : 0.0;
        jac.block(i * d, 1, d, 1) = -kappa * dsp * vi;
      }
      break;
    }
  }
  return jac;
}

State UniformBoxPrior::sample(Rng& rng, int d, int n, Order order) const {
  State s;
  s.x.resize(d * n);
  for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x(k) = rng.uniform(position_lo, position_hi);
  if (order == Order::Second) {
    s.v.resize(d * n);
    for (Eigen::Index k = 0; k < s.v.size(); ++k)
      s.v(k) = velocity_lo == velocity_hi ? velocity_lo
                                          : rng.uniform(velocity_lo, velocity_hi);
  }
  return s;
}

void ParticleSystemSpec::validate() const {
  if (d < 1) throw InvalidInput("spatial dimension must be >= 1");
  if (n < 2) throw InvalidInput("agent count must be >= 2");
  if (!masses.empty()) {
    if (static_cast<int>(masses.size()) != n)
      throw InvalidInput("one mass per agent required");
    for (double m : masses)
      if (!(m > 0.0)) throw InvalidInput("masses must be positive");
  }
  if (interaction == InteractionVariable::VelocityDifference && order != Order::Second)
    throw InvalidInput("velocity-difference interaction requires a second-order system");
  if (order == Order::First && (force.family() == NonCollectiveForce::Family::SelfPropulsion ||
                                force.family() == NonCollectiveForce::Family::RayleighFriction))
    throw InvalidInput("velocity-dependent forces require a second-order system");
  for (int a : force.stubborn_agents())
    if (a < 0 || a >= n) throw InvalidInput("stubborn agent index out of range");
  if (mu0.position_hi < mu0.position_lo || mu0.velocity_hi < mu0.velocity_lo)
    throw InvalidInput("initial-condition box has hi < lo");
}

namespace {

void check_dims(const ParticleSystemSpec& spec, const State& state) {
  const Eigen::Index dim = static_cast<Eigen::Index>(spec.d) * spec.n;
  if (state.x.size() != dim)
    throw InvalidInput("state has " + std::to_string(state.x.size()) +
                       " position entries, expected " + std::to_string(dim));
  if (spec.order == Order::Second && state.v.size() != dim)
    throw InvalidInput("second-order state needs " + std::to_string(dim) +
                       " velocity entries, got " + std::to_string(state.v.size()));
}

}  // namespace

Eigen::VectorXd interaction_force(const ParticleSystemSpec& spec, const State& state) {
  check_dims(spec, state);
  const int d = spec.d, n = spec.n;
  const bool by_velocity = spec.interaction == InteractionVariable::VelocityDifference;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d * n);
  if (!spec.kernel) return out;
  // Each unordered pair is visited once; u_ji = -u_ij.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = (state.x.segment(j * d, d) - state.x.segment(i * d, d)).norm();
      const double phi = spec.kernel(r);
      if (!std::isfinite(phi)) {
        std::ostringstream msg;
        msg << "interaction kernel is not finite at r = " << r;
        throw NumericError(msg.str(), r);
      }
      const Eigen::VectorXd u = by_velocity
                                    ? Eigen::VectorXd(state.v.segment(j * d, d) - state.v.segment(i * d, d))
                                    : Eigen::VectorXd(state.x.segment(j * d, d) - state.x.segment(i * d, d));
      out.segment(i * d, d) += phi * u;
      out.segment(j * d, d) -= phi * u;
    }
  }
  return out / static_cast<double>(n);
}

Eigen::VectorXd rhs(const ParticleSystemSpec& spec, const State& state) {
  Eigen::VectorXd out = interaction_force(spec, state) + spec.force.evaluate(state, spec.d);
  if (spec.order == Order::Second && !spec.masses.empty()) {
    for (int i = 0; i < spec.n; ++i) out.segment(i * spec.d, spec.d) /= spec.mass(i);
  }
  return out;
}

}  // namespace ipgp
