#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipgp/presets.hpp"

namespace ipgp {

struct EvaluationConfig {
  int grid_points = 200;       // kernel curve points on [0, R]
  int rho_trajectories = 2000;
  int bins = 200;
  int test_trajectories = 0;   // 0: as many as training trajectories
  int samples = 201;           // trajectory comparison times on [0, T_f]
  int trials = 1;              // reproduce: seeds seed .. seed + trials - 1
};

struct TheoryConfig {
  double lambda = 0.1;
  double sigma = 0.1;
  int instances = 20;
  int coercivity_samples = 5000;
  int random_probes = 5;
  std::vector<int> m_list{4, 16, 64};
  int seeds = 5;
  double gamma = 0.5;
};

/// Everything one CLI invocation needs. Sections of the JSON document:
///   preset   name of a compiled-in experiment
///   system   inline system (d, n, order, interaction, force, kernel, masses, mu0)
///   data     m, l, t_end, t_future, sigma
///   fit      alpha0, s0, omega0, sigma0, nu, max_evaluations,
///            gradient_tolerance, memory, restarts, row_cap
///   evaluation, theory   see the structs above
///   seed, threads, out
/// Sections override the preset field by field; unknown keys are rejected.
struct ExperimentConfig {
  std::optional<std::string> preset;
  bool has_system = false;
  Experiment experiment;
  EvaluationConfig evaluation;
  TheoryConfig theory;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "out";

  /// Throws InvalidInput when no system was given.
  const Experiment& require_system() const;
};

/// Parses a config document; `preset_override` replaces its "preset" entry.
/// Throws ParseError for malformed JSON and InvalidInput for bad values.
ExperimentConfig load_config(const std::string& text,
                             const std::optional<std::string>& preset_override = std::nullopt);

}  // namespace ipgp
