#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "ipgp/observations.hpp"

namespace ipgp {

/// One N x d block of agent positions per video frame.
using Frames = std::vector<Eigen::MatrixXd>;

struct PreprocessOptions {
  int window = 10;         // moving-average width in frames
  double dt = 1.0;         // frame spacing
  bool normalize = true;   // min-max each coordinate to [0, 1]
  std::vector<int> selected;  // smoothed-frame indices to keep; empty keeps all
  InteractionVariable interaction = InteractionVariable::VelocityDifference;
};

/// Normalizes, smooths with a full-width moving average ("valid" mode, so
/// F frames give F - window + 1 smoothed frames), then takes central
/// differences for velocities and accelerations. Smoothed frame j sits at
/// time dt * (j + (window - 1) / 2); frames with both neighbours are
/// eligible, and the result is a second-order set with M = 1.
ObservationSet preprocess_real_data(const Frames& frames, const PreprocessOptions& options);

/// Reads "frame,agent,x,y" rows (header required). Every frame must list the
/// same agents.
Frames read_frames_csv(std::istream& in);

}  // namespace ipgp
