#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/integrator.hpp"

namespace ipgp {

struct Snapshot {
  State state;
  /// Noisy velocities (first order) or accelerations (second order).
  Eigen::VectorXd target;
};

/// Training data on an M x L grid: exact states paired with noisy
/// derivative observations. Snapshots are stored trajectory-major,
/// index m * L + l.
struct ObservationSet {
  int d = 1;
  int n = 2;
  Order order = Order::First;
  InteractionVariable interaction = InteractionVariable::PositionDifference;
  std::vector<double> masses;  // empty means all ones
  int m = 0;
  int l = 0;
  std::vector<double> times;
  std::vector<Snapshot> snapshots;
  double sigma_true = 0.0;
  std::uint64_t seed = 0;

  const Snapshot& at(int traj, int snap) const {
    return snapshots[static_cast<std::size_t>(traj) * static_cast<std::size_t>(l) +
                     static_cast<std::size_t>(snap)];
  }
  /// Rows of the stacked target vector, d * N * M * L.
  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(d) * n * m * l;
  }
  double mass(int agent) const {
    return masses.empty() ? 1.0 : masses[static_cast<std::size_t>(agent)];
  }

  void validate() const;
  /// Fingerprint over dimensions and every stored double.
  std::string hash() const;
};

/// Draws M initial conditions from spec.mu0 (one RNG stream per trajectory),
/// integrates each, and records exact states plus derivative targets
/// corrupted by N(0, sigma^2) noise at L equispaced times on [0, T].
ObservationSet generate_observations(const ParticleSystemSpec& spec, int m, int l, double t_end,
                                     double sigma, std::uint64_t seed,
                                     const IntegratorOptions& options = {});

/// The initial states generate_observations uses for the same arguments.
std::vector<State> sample_initial_states(const ParticleSystemSpec& spec, int m,
                                         std::uint64_t seed, const char* stream = "data");

// Serialization. JSON holds metadata plus row-major arrays; CSV holds one
// row per (m, l, agent, coord). Both round-trip finite doubles exactly.
std::string observations_to_json(const ObservationSet& obs);
ObservationSet observations_from_json(const std::string& text);
void write_observations_csv(std::ostream& out, const ObservationSet& obs);
/// CSV carries no metadata beyond the grid; the skeleton supplies the rest.
ObservationSet read_observations_csv(std::istream& in, const ObservationSet& skeleton);

}  // namespace ipgp
