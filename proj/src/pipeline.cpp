#include "ipgp/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "ipgp/integrator.hpp"

namespace ipgp {

ObservationSet simulate_data(const Experiment& e, std::uint64_t seed) {
  return generate_observations(e.spec, e.m, e.l, e.t_end, e.sigma, seed);
}

TrainedModel train_model(const Experiment& e, const ObservationSet& obs, std::uint64_t seed) {
  FitConfig cfg = e.fit;
  cfg.seed = seed;
  return fit(obs, skeleton_of(e.spec, e.nu), cfg);
}

EmpiricalMeasure support_measure(const Experiment& e, const EvaluationConfig& ev, std::uint64_t seed,
                                 int threads) {
  return empirical_rho(e.spec, ev.rho_trajectories, e.l, e.t_end, ev.bins, seed, {}, threads);
}

std::vector<State> test_initial_states(const Experiment& e, const EvaluationConfig& ev, std::uint64_t seed) {
  const int count = ev.test_trajectories > 0 ? ev.test_trajectories : e.m;
  return sample_initial_states(e.spec, count, seed, "test");
}

std::vector<State> training_initial_states(const ObservationSet& obs) {
  std::vector<State> out;
  for (int m = 0; m < obs.m; ++m) out.push_back(obs.at(m, 0).state);
  return out;
}

PredictionOptions prediction_options(const Experiment& e, const EvaluationConfig& ev, int threads) {
  PredictionOptions po;
  po.t_end = e.t_end;
  po.t_future = e.t_future;
  po.samples = ev.samples;
  po.threads = threads;
  return po;
}

KernelEstimate kernel_curve(const TrainedModel& model, const ObservationSet& obs, const EmpiricalMeasure& rho,
                            const EvaluationConfig& ev) {
  return estimate_kernel_curve(model, obs, linspace(0.0, rho.r_max(), ev.grid_points), rho.r_max());
}

TrialResult run_trial(const Experiment& e, const EmpiricalMeasure& rho, const EvaluationConfig& ev,
                      std::uint64_t seed, int threads) {
  TrialResult t;
  t.seed = seed;
  const ObservationSet obs = simulate_data(e, seed);
  const auto start = std::chrono::steady_clock::now();
  t.model = train_model(e, obs, seed);
  t.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  t.curve = kernel_curve(t.model, obs, rho, ev);
  const PredictionOptions po = prediction_options(e, ev, threads);
  t.training = predict_and_score(t.model, e.spec, training_initial_states(obs), po, &rho, &obs);
  t.kernel_errors = *t.training.kernel;
  t.testing = predict_and_score(t.model, e.spec, test_initial_states(e, ev, seed), po);
  return t;
}

std::string trace_csv(const TrainedModel& model) {
  std::string out = "iteration,evaluations,value,gradient_norm\n";
  char buf[128];
  for (const auto& it : model.trace) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", it.iteration, it.evaluations, it.value,
                  it.gradient_norm);
    out += buf;
  }
  return out;
}

}  // namespace ipgp
