#include "ipgp/config.hpp"

#include <json.hpp>

#include "ipgp/errors.hpp"
#include "ipgp/radial.hpp"

namespace ipgp {

namespace {

using nlohmann::json;

// Rejects keys outside `allowed` so that typos never pass silently.
void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidInput("'" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw InvalidInput("unknown key '" + item.key() + "' in '" + where + "' (allowed: " + list + ")");
    }
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput("'" + where + "." + key + "' is missing or has the wrong type");
  }
}

template <class T>
void maybe(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::pair<double, double> range(const json& obj, const char* key, const std::string& where) {
  const auto v = get<std::vector<double>>(obj, key, where);
  if (v.size() != 2) throw InvalidInput("'" + where + "." + key + "' must be [lo, hi]");
  return {v[0], v[1]};
}

RadialFunction kernel_from(const json& k) {
  const std::string where = "system.kernel";
  const auto type = get<std::string>(k, "type", where);
  if (type == "opinion_piecewise") {
    check_keys(k, where, {"type"});
    return radial::opinion_piecewise;
  }
  if (type == "constant") {
    check_keys(k, where, {"type", "c"});
    return radial::constant(get<double>(k, "c", where));
  }
  if (type == "cucker_smale") {
    check_keys(k, where, {"type", "beta"});
    return radial::cucker_smale(get<double>(k, "beta", where));
  }
  if (type == "morse") {
    check_keys(k, where, {"type", "c_rep", "l_rep", "c_att", "l_att", "truncate_at"});
    RadialFunction phi = radial::morse(get<double>(k, "c_rep", where), get<double>(k, "l_rep", where),
                                       get<double>(k, "c_att", where), get<double>(k, "l_att", where));
    if (k.contains("truncate_at")) phi = radial::truncate_c1(phi, get<double>(k, "truncate_at", where));
    return phi;
  }
  if (type == "matern_span") {
    check_keys(k, where, {"type", "centers", "weights", "nu", "s", "omega"});
    return radial::matern_span(get<std::vector<double>>(k, "centers", where),
                               get<std::vector<double>>(k, "weights", where),
                               get<double>(k, "nu", where), get<double>(k, "s", where),
                               get<double>(k, "omega", where));
  }
  throw InvalidInput("unknown kernel type '" + type +
                     "' (valid: opinion_piecewise, constant, cucker_smale, morse, matern_span)");
}

NonCollectiveForce force_from(const json& f) {
  const std::string where = "system.force";
  check_keys(f, where, {"family", "params", "stubborn_agents"});
  const auto family = get<std::string>(f, "family", where);
  std::vector<double> p;
  maybe(f, "params", where, p);
  const auto need = [&](std::size_t k) {
    if (p.size() != k) throw InvalidInput("force family '" + family + "' takes " + std::to_string(k) + " parameters");
  };
  if (family == "zero") {
    need(0);
    return NonCollectiveForce::zero();
  }
  if (family == "self_propulsion") {
    need(2);
    return NonCollectiveForce::self_propulsion(p[0], p[1]);
  }
  if (family == "rayleigh") {
    need(2);
    return NonCollectiveForce::rayleigh(p[0], p[1]);
  }
  if (family == "stubborn") {
    const auto agents = get<std::vector<int>>(f, "stubborn_agents", where);
    need(agents.size() + 1);
    const double kappa = p.back();
    p.pop_back();
    return NonCollectiveForce::stubborn(p, kappa, agents);
  }
  throw InvalidInput("unknown force family '" + family + "' (valid: zero, stubborn, self_propulsion, rayleigh)");
}

ParticleSystemSpec system_from(const json& s) {
  const std::string where = "system";
  check_keys(s, where, {"d", "n", "order", "interaction", "force", "kernel", "masses", "mu0"});
  ParticleSystemSpec spec;
  spec.d = get<int>(s, "d", where);
  spec.n = get<int>(s, "n", where);
  spec.order = order_from_string(get<std::string>(s, "order", where));
  if (s.contains("interaction")) spec.interaction = interaction_from_string(get<std::string>(s, "interaction", where));
  spec.force = s.contains("force") ? force_from(s.at("force")) : NonCollectiveForce::zero();
  if (!s.contains("kernel")) throw InvalidInput("'system.kernel' is required");
  spec.kernel = kernel_from(s.at("kernel"));
  maybe(s, "masses", where, spec.masses);
  if (!s.contains("mu0")) throw InvalidInput("'system.mu0' is required");
  const json& mu = s.at("mu0");
  check_keys(mu, "system.mu0", {"position", "velocity"});
  std::tie(spec.mu0.position_lo, spec.mu0.position_hi) = range(mu, "position", "system.mu0");
  if (mu.contains("velocity"))
    std::tie(spec.mu0.velocity_lo, spec.mu0.velocity_hi) = range(mu, "velocity", "system.mu0");
  spec.validate();
  return spec;
}

void apply_data(const json& j, Experiment& e) {
  const std::string where = "data";
  check_keys(j, where, {"m", "l", "t_end", "t_future", "sigma"});
  maybe(j, "m", where, e.m);
  maybe(j, "l", where, e.l);
  maybe(j, "t_end", where, e.t_end);
  maybe(j, "t_future", where, e.t_future);
  maybe(j, "sigma", where, e.sigma);
  if (e.m < 1 || e.l < 1) throw InvalidInput("data needs m >= 1 and l >= 1");
  if (!(e.t_end >= 0.0) || !(e.t_future >= e.t_end)) throw InvalidInput("data needs 0 <= t_end <= t_future");
  if (!(e.sigma >= 0.0)) throw InvalidInput("data needs sigma >= 0");
}

void apply_fit(const json& j, Experiment& e) {
  const std::string where = "fit";
  check_keys(j, where, {"alpha0", "s0", "omega0", "sigma0", "nu", "max_evaluations",
                        "gradient_tolerance", "memory", "restarts", "row_cap"});
  FitConfig& f = e.fit;
  if (j.contains("alpha0")) {
    const auto a = get<std::vector<double>>(j, "alpha0", where);
    f.alpha0 = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  }
  maybe(j, "s0", where, f.s0);
  if (j.contains("omega0")) f.omega0 = get<double>(j, "omega0", where);
  maybe(j, "sigma0", where, f.sigma0);
  if (j.contains("nu")) e.nu = smoothness_from_value(get<double>(j, "nu", where));
  maybe(j, "max_evaluations", where, f.max_evaluations);
  maybe(j, "gradient_tolerance", where, f.gradient_tolerance);
  maybe(j, "memory", where, f.memory);
  maybe(j, "restarts", where, f.restarts);
  if (j.contains("row_cap")) f.row_cap = get<Eigen::Index>(j, "row_cap", where);
  f.validate();
}

void apply_evaluation(const json& j, EvaluationConfig& ev) {
  const std::string where = "evaluation";
  check_keys(j, where, {"grid_points", "rho_trajectories", "bins", "test_trajectories", "samples", "trials"});
  maybe(j, "grid_points", where, ev.grid_points);
  maybe(j, "rho_trajectories", where, ev.rho_trajectories);
  maybe(j, "bins", where, ev.bins);
  maybe(j, "test_trajectories", where, ev.test_trajectories);
  maybe(j, "samples", where, ev.samples);
  maybe(j, "trials", where, ev.trials);
  if (ev.grid_points < 2 || ev.rho_trajectories < 1 || ev.bins < 1 || ev.test_trajectories < 0 ||
      ev.samples < 2 || ev.trials < 1)
    throw InvalidInput("evaluation values out of range");
}

void apply_theory(const json& j, TheoryConfig& t) {
  const std::string where = "theory";
  check_keys(j, where, {"lambda", "sigma", "instances", "coercivity_samples", "random_probes", "m_list",
                        "seeds", "gamma"});
  maybe(j, "lambda", where, t.lambda);
  maybe(j, "sigma", where, t.sigma);
  maybe(j, "instances", where, t.instances);
  maybe(j, "coercivity_samples", where, t.coercivity_samples);
  maybe(j, "random_probes", where, t.random_probes);
  maybe(j, "m_list", where, t.m_list);
  maybe(j, "seeds", where, t.seeds);
  maybe(j, "gamma", where, t.gamma);
  if (!(t.lambda > 0.0) || !(t.sigma > 0.0) || t.instances < 1 || t.coercivity_samples < 2 ||
      t.random_probes < 0 || t.seeds < 1 || !(t.gamma > 0.0))
    throw InvalidInput("theory values out of range");
}

}  // namespace

const Experiment& ExperimentConfig::require_system() const {
  if (!has_system) throw InvalidInput("no system configured: give a preset (--preset or \"preset\") or a \"system\" section");
  return experiment;
}

ExperimentConfig load_config(const std::string& text, const std::optional<std::string>& preset_override) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }
  check_keys(j, "config", {"preset", "system", "data", "fit", "evaluation", "theory", "seed", "threads", "out"});

  ExperimentConfig cfg;
  cfg.preset = preset_override;
  if (!cfg.preset && j.contains("preset")) cfg.preset = get<std::string>(j, "preset", "config");
  if (cfg.preset) {
    cfg.experiment = preset(*cfg.preset);
    cfg.has_system = true;
  }
  if (j.contains("system")) {
    cfg.experiment.spec = system_from(j.at("system"));
    cfg.experiment.name = "custom";
    // A replaced system keeps only the generic fit defaults.
    cfg.experiment.fit.alpha0.reset();
    cfg.has_system = true;
  }
  if (j.contains("data")) apply_data(j.at("data"), cfg.experiment);
  if (j.contains("fit")) apply_fit(j.at("fit"), cfg.experiment);
  if (j.contains("evaluation")) apply_evaluation(j.at("evaluation"), cfg.evaluation);
  if (j.contains("theory")) apply_theory(j.at("theory"), cfg.theory);
  maybe(j, "seed", "config", cfg.seed);
  maybe(j, "threads", "config", cfg.threads);
  maybe(j, "out", "config", cfg.out);
  if (cfg.threads < 1) throw InvalidInput("threads must be >= 1");
  return cfg;
}

}  // namespace ipgp
