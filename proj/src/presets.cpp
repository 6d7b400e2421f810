#include "ipgp/presets.hpp"

#include "ipgp/errors.hpp"
#include "ipgp/radial.hpp"

namespace ipgp {

std::vector<std::string> preset_names() { return {"od", "dorsogma", "cucker-smale"}; }

namespace {

// Opinion dynamics: ten agents on the line, the first three stubborn.
Experiment opinion_dynamics() {
  Experiment e;
  e.name = "od";
  e.spec.d = 1;
  e.spec.n = 10;
  e.spec.order = Order::First;
  e.spec.force = NonCollectiveForce::stubborn({1.0, 0.0, -1.0}, 10.0, {0, 1, 2});
  e.spec.kernel = radial::opinion_piecewise;
  e.spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
  e.m = 6;
  e.l = 4;
  e.t_end = 15.0;
  e.t_future = 20.0;
  e.sigma = 0.05;
  e.fit.alpha0 = Eigen::VectorXd::Constant(4, 0.5);
  e.fit.sigma0 = 0.5;
  return e;
}

// Self-propelled particles with a truncated Morse interaction.
Experiment dorsogma() {
  Experiment e;
  e.name = "dorsogma";
  e.spec.d = 2;
  e.spec.n = 10;
  e.spec.order = Order::Second;
  e.spec.force = NonCollectiveForce::self_propulsion(1.5, 0.5);
  e.spec.kernel = radial::truncate_c1(radial::morse(0.5, 0.5, 4.0, 4.0), 0.05);
  e.spec.masses.assign(10, 1.0);
  e.spec.mu0 = {-0.5, 0.5, 0.0, 0.0};
  e.m = 3;
  e.l = 3;
  e.t_end = 5.0;
  e.t_future = 10.0;
  e.sigma = 0.1;
  e.fit.alpha0 = Eigen::Vector2d(1.0, 1.0);
  e.fit.sigma0 = 1.0;
  return e;
}

// Alignment with Rayleigh friction; velocities start in the positive
// quadrant so the group flocks.
Experiment cucker_smale() {
  Experiment e;
  e.name = "cucker-smale";
  e.spec.d = 2;
  e.spec.n = 10;
  e.spec.order = Order::Second;
  e.spec.interaction = InteractionVariable::VelocityDifference;
  e.spec.force = NonCollectiveForce::rayleigh(1.0, 2.0);
  e.spec.kernel = radial::cucker_smale(0.5);
  e.spec.masses.assign(10, 1.0);
  e.spec.mu0 = {-1.0, 1.0, 0.0, 1.0};
  e.m = 3;
  e.l = 3;
  e.t_end = 5.0;
  e.t_future = 10.0;
  e.sigma = 0.05;
  e.fit.alpha0 = Eigen::Vector2d(1.0, 1.0);
  e.fit.s0 = 1.0;
  e.fit.omega0 = 1.0;
  e.fit.sigma0 = 0.001;
  e.fit.max_evaluations = 100;
  return e;
}

}  // namespace

Experiment preset(const std::string& name) {
  if (name == "od") return opinion_dynamics();
  if (name == "dorsogma") return dorsogma();
  if (name == "cucker-smale") return cucker_smale();
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidInput("unknown preset '" + name + "' (valid: " + valid + ")");
}

}  // namespace ipgp
