#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "ipgp/config.hpp"
#include "ipgp/errors.hpp"
#include "ipgp/hash.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/pipeline.hpp"
#include "ipgp/theory.hpp"

namespace ipgp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Collects the files written by one command and records them in
/// <out>/manifest.json, merged with entries from earlier commands.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = root_ / name;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << content) || !f.flush()) throw InvalidInput("cannot write '" + path.string() + "'");
    written_[name] = content;
  }

  void write_manifest() {
    ordered_json files = ordered_json::object();
    const fs::path mpath = root_ / "manifest.json";
    std::map<std::string, ordered_json> merged;
    if (fs::exists(mpath)) {
      try {
        const auto old = ordered_json::parse(read_file(mpath.string()));
        for (const auto& item : old.at("files").items()) merged[item.key()] = item.value();
      } catch (const ordered_json::exception&) {
        // An unreadable manifest is rebuilt from this command's files.
      }
    }
    for (const auto& [name, content] : written_)
      merged[name] = {{"fnv1a64", fnv1a_hex(content)}, {"bytes", content.size()}};
    for (const auto& [name, entry] : merged) files[name] = entry;
    ordered_json m;
    m["format"] = "ipgp.manifest/1";
    m["files"] = files;
    std::ofstream f(mpath, std::ios::binary);
    if (!f || !(f << m.dump(2) << "\n")) throw InvalidInput("cannot write '" + mpath.string() + "'");
  }

 private:
  fs::path root_;
  std::map<std::string, std::string> written_;
};

struct Globals {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<int> threads;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = load_config(g.config_path.empty() ? std::string() : read_file(g.config_path), g.preset);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) {
    if (*g.threads < 1) throw InvalidInput("--threads must be >= 1");
    cfg.threads = *g.threads;
  }
  if (!g.out.empty()) cfg.out = g.out;
  return cfg;
}

ObservationSet load_observations(const std::string& path) { return observations_from_json(read_file(path)); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ordered_json model_summary(const TrainedModel& m) {
  ordered_json j;
  const Eigen::VectorXd alpha = m.force.pack();
  j["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
  j["param_names"] = m.force.param_names();
  j["s"] = m.kernel.s();
  j["omega"] = m.kernel.omega();
  j["sigma"] = m.sigma;
  j["nll"] = m.nll;
  j["evaluations"] = m.evaluations;
  j["converged"] = m.converged;
  j["stalled"] = m.stalled;
  j["budget_exhausted"] = m.budget_exhausted;
  return j;
}

std::string kernel_csv(const KernelEstimate& est) {
  std::ostringstream ss;
  write_kernel_csv(ss, est);
  return ss.str();
}

ordered_json errors_json(const KernelErrors& e, const KernelEstimate& est, const EmpiricalMeasure& rho) {
  ordered_json j;
  j["rel_linf"] = e.rel_linf;
  j["rel_l2_rho_tilde"] = e.rel_l2_rho_tilde;
  j["support_r"] = rho.r_max();
  j["clipped_variances"] = est.clipped;
  return j;
}

std::string predictions_json(const PredictionReport& train, const PredictionReport& test) {
  ordered_json j;
  j["training_initial_conditions"] = ordered_json::parse(prediction_report_json(train));
  j["test_initial_conditions"] = ordered_json::parse(prediction_report_json(test));
  return j.dump(2) + "\n";
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const Experiment& e = cfg.require_system();
  const ObservationSet obs = simulate_data(e, cfg.seed);
  OutputDir dir(cfg.out);
  dir.write("data.json", observations_to_json(obs));
  std::ostringstream csv;
  write_observations_csv(csv, obs);
  dir.write("data.csv", csv.str());
  dir.write_manifest();
  out << "data_hash " << obs.hash() << "\n";
  return kOk;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data_path, std::ostream& out) {
  const Experiment& e = cfg.require_system();
  const ObservationSet obs = load_observations(data_path);
  const TrainedModel model = train_model(e, obs, cfg.seed);
  OutputDir dir(cfg.out);
  dir.write("model.json", model_to_json(model));
  dir.write("trace.csv", trace_csv(model));
  dir.write_manifest();
  out << model_summary(model).dump() << "\n";
  return kOk;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& data_path, const std::string& model_path,
                 std::ostream& out) {
  const Experiment& e = cfg.require_system();
  const ObservationSet obs = load_observations(data_path);
  const TrainedModel model = model_from_json(read_file(model_path), obs);
  const EmpiricalMeasure rho = support_measure(e, cfg.evaluation, cfg.seed, cfg.threads);
  const KernelEstimate est = kernel_curve(model, obs, rho, cfg.evaluation);
  const KernelErrors err = error_metrics(est, e.spec.kernel, rho);
  OutputDir dir(cfg.out);
  dir.write("kernel.csv", kernel_csv(est));
  dir.write("errors.json", errors_json(err, est, rho).dump(2) + "\n");
  dir.write_manifest();
  out << "rel_linf " << fmt("%.6g", err.rel_linf) << " rel_l2 " << fmt("%.6g", err.rel_l2_rho_tilde) << "\n";
  return kOk;
}

int cmd_predict(const ExperimentConfig& cfg, const std::string& data_path, const std::string& model_path,
                std::ostream& out) {
  const Experiment& e = cfg.require_system();
  const ObservationSet obs = load_observations(data_path);
  const TrainedModel model = model_from_json(read_file(model_path), obs);
  const PredictionOptions po = prediction_options(e, cfg.evaluation, cfg.threads);
  const PredictionReport train = predict_and_score(model, e.spec, training_initial_states(obs), po);
  const PredictionReport test = predict_and_score(model, e.spec, test_initial_states(e, cfg.evaluation, cfg.seed), po);
  OutputDir dir(cfg.out);
  dir.write("prediction.json", predictions_json(train, test));
  dir.write_manifest();
  out << "mean_train_error " << fmt("%.6g", train.mean_train_error) << " mean_future_error "
      << fmt("%.6g", train.mean_future_error) << "\n";
  return kOk;
}

int cmd_gp_krr(const ExperimentConfig& cfg, std::ostream& out) {
  const TheoryConfig& t = cfg.theory;
  const MaternKernel kernel(Smoothness::ThreeHalves, 1.0, 0.5);
  const auto grid = linspace(0.0, 3.0, 201);
  ordered_json j;
  auto& rows = j["instances"] = ordered_json::array();
  double worst = 0.0;
  bool ok = true;
  for (int k = 0; k < t.instances; ++k) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
    const ObservationSet obs = seeded_instance(seed, t.sigma);
    const GpKrrReport rep = check_gp_krr_equivalence(obs, kernel, t.sigma, t.lambda, grid);
    worst = std::max(worst, rep.max_discrepancy);
    ok = ok && rep.max_discrepancy <= rep.tolerance();
    rows.push_back({{"seed", seed}, {"n", obs.n}, {"d", obs.d}, {"m", obs.m}, {"l", obs.l},
                    {"max_discrepancy", rep.max_discrepancy}, {"tolerance", rep.tolerance()}});
  }
  const GpKrrReport neg = check_gp_krr_equivalence(seeded_instance(cfg.seed, t.sigma), kernel, t.sigma, t.lambda,
                                                   grid, NonCollectiveForce::zero(), true);
  j["lambda"] = t.lambda;
  j["sigma"] = t.sigma;
  j["max_discrepancy"] = worst;
  j["mis_scaled_control_discrepancy"] = neg.max_discrepancy;
  j["equivalent"] = ok;
  OutputDir dir(cfg.out);
  dir.write("gp_krr.json", j.dump(2) + "\n");
  dir.write_manifest();
  out << "max discrepancy " << fmt("%.3e", worst) << " over " << t.instances << " instances; mis-scaled control "
      << fmt("%.3e", neg.max_discrepancy) << "\n";
  return ok ? kOk : kConsistencyFailure;
}

int cmd_coercivity(const ExperimentConfig& cfg, std::ostream& out) {
  const Experiment& e = cfg.require_system();
  CoercivityOptions co;
  co.samples = cfg.theory.coercivity_samples;
  co.l = e.l;
  co.t_end = e.t_end;
  co.random_probes = cfg.theory.random_probes;
  co.seed = cfg.seed;
  const CoercivityReport rep = estimate_coercivity(e.spec, co);
  bool ok = true;
  for (const auto& p : rep.probes) ok = ok && p.ratio <= rep.upper_bound + 3.0 * p.standard_error;
  OutputDir dir(cfg.out);
  dir.write("coercivity.json", coercivity_report_json(rep));
  dir.write_manifest();
  for (const auto& s : rep.skipped) out << "warning: probe '" << s << "' has zero norm, skipped\n";
  out << "min ratio " << fmt("%.6g", rep.min_ratio) << " (upper bound " << fmt("%.6g", rep.upper_bound) << ")\n";
  return ok ? kOk : kConsistencyFailure;
}

int cmd_convergence(const ExperimentConfig& cfg, std::ostream& out) {
  ConvergenceOptions co;
  co.m_list = cfg.theory.m_list;
  co.seeds = cfg.theory.seeds;
  co.gamma = cfg.theory.gamma;
  co.seed = cfg.seed;
  co.threads = cfg.threads;
  const ConvergenceStudy study = convergence_study(convergence_system(), convergence_kernel(), co);
  OutputDir dir(cfg.out);
  dir.write("convergence.json", convergence_study_json(study));
  dir.write_manifest();
  for (const auto& r : study.rows) out << "M " << r.m << " median_rel_l2 " << fmt("%.6g", r.median_l2) << "\n";
  if (study.slope) out << "loglog slope " << fmt("%.4f", *study.slope) << "\n";
  return kOk;
}

int cmd_reproduce(const ExperimentConfig& cfg, std::ostream& out) {
  const Experiment& e = cfg.require_system();
  const EmpiricalMeasure rho = support_measure(e, cfg.evaluation, cfg.seed, cfg.threads);
  OutputDir dir(cfg.out);
  ordered_json summary;
  summary["experiment"] = e.name;
  summary["support_r"] = rho.r_max();
  auto& trials = summary["trials"] = ordered_json::array();
  for (int k = 0; k < cfg.evaluation.trials; ++k) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
    const TrialResult t = run_trial(e, rho, cfg.evaluation, seed, cfg.threads);
    const std::string sub = "trial_" + std::to_string(seed) + "/";
    dir.write(sub + "data.json", observations_to_json(simulate_data(e, seed)));
    dir.write(sub + "model.json", model_to_json(t.model));
    dir.write(sub + "trace.csv", trace_csv(t.model));
    dir.write(sub + "kernel.csv", kernel_csv(t.curve));
    dir.write(sub + "prediction.json", predictions_json(t.training, t.testing));
    ordered_json row = model_summary(t.model);
    row["seed"] = seed;
    row["rel_linf"] = t.kernel_errors.rel_linf;
    row["rel_l2_rho_tilde"] = t.kernel_errors.rel_l2_rho_tilde;
    row["mean_train_error"] = t.training.mean_train_error;
    row["mean_future_error"] = t.training.mean_future_error;
    row["test_mean_train_error"] = t.testing.mean_train_error;
    row["test_mean_future_error"] = t.testing.mean_future_error;
    if (t.training.final_flocking) row["final_flocking_score"] = *t.training.final_flocking;
    trials.push_back(row);
    out << "trial " << seed << " rel_linf " << fmt("%.4g", t.kernel_errors.rel_linf) << " rel_l2 "
        << fmt("%.4g", t.kernel_errors.rel_l2_rho_tilde) << " traj " << fmt("%.4g", t.training.mean_train_error)
        << "\n";
  }
  dir.write("summary.json", summary.dump(2) + "\n");
  dir.write_manifest();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn interaction kernels of particle systems with Gaussian processes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out, "output directory (default from config, else ./out)");
  app.add_option("--seed", g.seed, "seed overriding the config");
  app.add_option("--preset", g.preset, "compiled-in experiment: od, dorsogma, cucker-smale");
  app.add_option("--threads", g.threads, "worker threads");
  app.fallthrough();

  std::string data_path, model_path;
  auto* simulate = app.add_subcommand("simulate", "generate training data");
  auto* train = app.add_subcommand("train", "fit force parameters and kernel hyperparameters");
  train->add_option("--data", data_path, "observations JSON (default <out>/data.json)");
  auto* predict = app.add_subcommand("predict", "trajectory prediction errors of a trained model");
  auto* evaluate = app.add_subcommand("evaluate", "posterior kernel curve and kernel errors");
  for (auto* sc : {predict, evaluate}) {
    sc->add_option("--data", data_path, "observations JSON (default <out>/data.json)");
    sc->add_option("--model", model_path, "model JSON (default <out>/model.json)");
  }
  auto* theory = app.add_subcommand("theory", "executable checks of the learning theory");
  theory->require_subcommand(1);
  auto* gp_krr = theory->add_subcommand("gp-krr", "GP posterior mean vs kernel ridge regression");
  auto* coercivity = theory->add_subcommand("coercivity", "Monte Carlo coercivity ratios");
  auto* convergence = theory->add_subcommand("convergence", "KRR error against the number of trajectories");
  auto* reproduce = app.add_subcommand("reproduce", "simulate, train and score seeded trials");

  try {
    std::vector<std::string> args;
    for (int k = argc - 1; k >= 1; --k) args.emplace_back(argv[k]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    const ExperimentConfig cfg = resolve(g);
    const std::string out_dir = cfg.out;
    const std::string data = data_path.empty() ? (fs::path(out_dir) / "data.json").string() : data_path;
    const std::string model = model_path.empty() ? (fs::path(out_dir) / "model.json").string() : model_path;
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (train->parsed()) return cmd_train(cfg, data, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, data, model, out);
    if (predict->parsed()) return cmd_predict(cfg, data, model, out);
    if (gp_krr->parsed()) return cmd_gp_krr(cfg, out);
    if (coercivity->parsed()) return cmd_coercivity(cfg, out);
    if (convergence->parsed()) return cmd_convergence(cfg, out);
    if (reproduce->parsed()) return cmd_reproduce(cfg, out);
    return kInputError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << " (byte " << e.byte_offset() << ")\n";
    return kInputError;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << " (frame " << e.frame() << ")\n";
    return kInputError;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const OptimizationFailure& e) {
    err << "optimization failed: " << e.what() << "\n";
    return kOptimizationFailure;
  } catch (const ContractError& e) {
    err << "consistency error: " << e.what() << "\n";
    return kConsistencyFailure;
  } catch (const IntegrationFailure& e) {
    err << "integration failed: " << e.what() << " (last good time " << e.last_good_time() << ")\n";
    return kFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace ipgp::cli
