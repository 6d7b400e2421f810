#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipgp/config.hpp"
#include "ipgp/evaluation.hpp"
#include "ipgp/observations.hpp"
#include "ipgp/training.hpp"

namespace ipgp {

/// Training data for seed `seed` ("data" and "noise" streams).
ObservationSet simulate_data(const Experiment& e, std::uint64_t seed);

/// Fits the experiment's skeleton with its fit configuration.
TrainedModel train_model(const Experiment& e, const ObservationSet& obs, std::uint64_t seed);

/// rho over the training design (stream "rho").
EmpiricalMeasure support_measure(const Experiment& e, const EvaluationConfig& ev, std::uint64_t seed,
                                 int threads = 1);

/// Fresh initial conditions from stream "test".
std::vector<State> test_initial_states(const Experiment& e, const EvaluationConfig& ev, std::uint64_t seed);
std::vector<State> training_initial_states(const ObservationSet& obs);

PredictionOptions prediction_options(const Experiment& e, const EvaluationConfig& ev, int threads = 1);

/// Posterior curve on grid_points equispaced points of [0, R].
KernelEstimate kernel_curve(const TrainedModel& model, const ObservationSet& obs,
                            const EmpiricalMeasure& rho, const EvaluationConfig& ev);

struct TrialResult {
  std::uint64_t seed = 0;
  TrainedModel model;
  KernelEstimate curve;
  KernelErrors kernel_errors{};
  PredictionReport training;  // from the training initial conditions
  PredictionReport testing;   // from fresh initial conditions
  double fit_seconds = 0.0;
};

/// Simulate, train, and score one seeded trial of an experiment.
TrialResult run_trial(const Experiment& e, const EmpiricalMeasure& rho, const EvaluationConfig& ev,
                      std::uint64_t seed, int threads = 1);

/// "iteration,evaluations,value,gradient_norm"
std::string trace_csv(const TrainedModel& model);

}  // namespace ipgp
