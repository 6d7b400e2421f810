#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. They favour directness over speed.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "ipgp/errors.hpp"
#include "ipgp/gp_core.hpp"
#include "ipgp/radial.hpp"

namespace ipgp::oracle {

inline ObservationSet make_obs(Order order, InteractionVariable var, int d, int n, int m, int l,
                        std::uint64_t seed) {
  ParticleSystemSpec spec;
  spec.d = d;
  spec.n = n;
  spec.order = order;
  spec.interaction = var;
  spec.kernel = radial::cucker_smale(0.7);
  spec.mu0 = {-1.0, 1.0, -0.5, 0.5};
  if (order == Order::Second) {
    spec.force = NonCollectiveForce::rayleigh(0.5, 2.0);
    spec.masses.assign(static_cast<std::size_t>(n), 1.0);
    spec.masses[0] = 2.0;
  } else {
    spec.force = NonCollectiveForce::stubborn({0.5}, 2.0, {1});
  }
  return generate_observations(spec, m, l, 1.0, 0.1, seed);
}

// Direct quadruple sum over ordered agent pairs, self-pairs included.
inline Eigen::MatrixXd brute_force_cov(const ObservationSet& obs, const MaternKernel& k) {
  const int d = obs.d, n = obs.n;
  const Eigen::Index rows = obs.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, rows);
  const auto u = [&](const State& s, int i, int j) -> Eigen::VectorXd {
    if (obs.interaction == InteractionVariable::VelocityDifference)
      return s.v.segment(j * d, d) - s.v.segment(i * d, d);
    return s.x.segment(j * d, d) - s.x.segment(i * d, d);
  };
  const auto dist = [&](const State& s, int i, int j) {
    return (s.x.segment(j * d, d) - s.x.segment(i * d, d)).norm();
  };
  const std::size_t snaps = obs.snapshots.size();
  for (std::size_t a = 0; a < snaps; ++a)
    for (std::size_t b = 0; b < snaps; ++b) {
      const State& sa = obs.snapshots[a].state;
      const State& sb = obs.snapshots[b].state;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
          for (int k2 = 0; k2 < n; ++k2)
            for (int l2 = 0; l2 < n; ++l2)
              block += k.eval(dist(sa, i, k2), dist(sb, j, l2)) * u(sa, i, k2) * u(sb, j, l2).transpose();
          out.block(static_cast<Eigen::Index>(a) * d * n + i * d,
                    static_cast<Eigen::Index>(b) * d * n + j * d, d, d) = block / (n * n);
        }
    }
  return out;
}

inline double dense_nll(const ObservationSet& obs, const GpParams& p) {
  Eigen::MatrixXd c = brute_force_cov(obs, p.kernel);
  c.diagonal().array() += p.sigma * p.sigma;
  const Eigen::VectorXd r = stacked_targets(obs) - stacked_force(obs, p.force);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
  return 0.5 * r.dot(lu.solve(r)) + 0.5 * std::log(lu.determinant()) +
         0.5 * static_cast<double>(r.size()) * std::log(2 * std::numbers::pi);
}

inline GpParams unpack(const GpParams& base, const Eigen::VectorXd& x) {
  const Eigen::Index na = static_cast<Eigen::Index>(base.force.param_count());
  return {base.force.unpack(x.head(na)),
          MaternKernel::from_log(base.kernel.nu(), x(na), x(na + 1)), std::exp(x(na + 2))};
}

inline Eigen::VectorXd pack(const GpParams& p) {
  const Eigen::Index na = static_cast<Eigen::Index>(p.force.param_count());
  Eigen::VectorXd x(na + 3);
  x.head(na) = p.force.pack();
  x(na) = std::log(p.kernel.s());
  x(na + 1) = std::log(p.kernel.omega());
  x(na + 2) = std::log(p.sigma);
  return x;
}

// Direct sum for Cov(f_i, phi(r*)) = (1/N) sum_k K(r_ik, r*) u_ik.
inline Eigen::VectorXd brute_force_cross(const ObservationSet& obs, const MaternKernel& k, double rs) {
  const int d = obs.d, n = obs.n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(obs.rows());
  for (std::size_t a = 0; a < obs.snapshots.size(); ++a) {
    const State& s = obs.snapshots[a].state;
    const Eigen::VectorXd& z = obs.interaction == InteractionVariable::VelocityDifference ? s.v : s.x;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = (s.x.segment(j * d, d) - s.x.segment(i * d, d)).norm();
        out.segment(static_cast<Eigen::Index>(a) * d * n + i * d, d) +=
            k.eval(r, rs) * (z.segment(j * d, d) - z.segment(i * d, d)) / n;
      }
  }
  return out;
}

// The same single-trajectory data set without its last snapshot.
inline ObservationSet drop_last_snapshot(ObservationSet obs) {
  if (obs.m != 1 || obs.l < 2) throw InvalidInput("needs one trajectory with two or more snapshots");
  obs.snapshots.pop_back();
  obs.times.pop_back();
  --obs.l;
  return obs;
}

}  // namespace ipgp::oracle
