#pragma once

#include <string>
#include <vector>

#include "ipgp/dynamics.hpp"
#include "ipgp/kernels.hpp"
#include "ipgp/training.hpp"

namespace ipgp {

/// A complete synthetic experiment: true system, sampling design, and the
/// fit configuration used to learn it back.
struct Experiment {
  std::string name;
  ParticleSystemSpec spec;
  Smoothness nu = Smoothness::ThreeHalves;
  int m = 1;
  int l = 1;
  double t_end = 1.0;     // training horizon T
  double t_future = 1.0;  // prediction horizon T_f >= T
  double sigma = 0.0;
  FitConfig fit;
};

std::vector<std::string> preset_names();
/// Throws InvalidInput naming the valid presets.
Experiment preset(const std::string& name);

}  // namespace ipgp
