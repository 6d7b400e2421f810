#include "ipgp/training.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ipgp/errors.hpp"
#include "ipgp/rng.hpp"

namespace ipgp {

using json = nlohmann::json;

void Skeleton::check(const ObservationSet& obs) const {
  std::ostringstream msg;
  if (obs.d != d || obs.n != n)
    msg << "data has d=" << obs.d << ", N=" << obs.n << " but the model expects d=" << d << ", N=" << n;
  else if (obs.order != order)
    msg << "data is " << to_string(obs.order) << "-order but the model is " << to_string(order) << "-order";
  else if (obs.interaction != interaction)
    msg << "data uses " << to_string(obs.interaction) << " differences but the model uses "
        << to_string(interaction);
  for (int a : force.stubborn_agents())
    if (a < 0 || a >= n) msg << "stubborn agent " << a << " out of range";
  if (!msg.str().empty()) throw InvalidInput(msg.str());
}

Skeleton skeleton_of(const ParticleSystemSpec& spec, Smoothness nu) {
  return {spec.d, spec.n, spec.order, spec.interaction, spec.force, nu};
}

void FitConfig::validate() const {
  if (max_evaluations < 0) throw InvalidInput("evaluation budget must be >= 0");
  if (!(gradient_tolerance > 0.0)) throw InvalidInput("gradient tolerance must be > 0");
  if (memory < 1) throw InvalidInput("L-BFGS memory must be >= 1");
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (!(s0 > 0.0) || !(sigma0 > 0.0) || (omega0 && !(*omega0 > 0.0)))
    throw InvalidInput("initial s, omega and sigma must be > 0");
}

LineSearchObjective::LineSearchObjective(std::shared_ptr<const GpObjective> objective,
                                         Skeleton skeleton)
    : objective_(std::move(objective)), skeleton_(std::move(skeleton)) {}

Eigen::Index LineSearchObjective::size() const {
  return static_cast<Eigen::Index>(skeleton_.force.param_count()) + 3;
}

GpParams LineSearchObjective::unpack(const Eigen::VectorXd& x) const {
  if (x.size() != size())
    throw InvalidInput("packed parameter vector has length " + std::to_string(x.size()) +
                       ", expected " + std::to_string(size()));
  const Eigen::Index na = size() - 3;
  return {skeleton_.force.unpack(x.head(na)),
          MaternKernel::from_log(skeleton_.nu, x(na), x(na + 1)), std::exp(x(na + 2))};
}

Eigen::VectorXd LineSearchObjective::pack(const GpParams& params) const {
  Eigen::VectorXd x(size());
  const Eigen::Index na = size() - 3;
  x.head(na) = params.force.pack();
  x(na) = std::log(params.kernel.s());
  x(na + 1) = std::log(params.kernel.omega());
  x(na + 2) = std::log(params.sigma);
  return x;
}

double LineSearchObjective::operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
  if (has_last_ && x.size() == last_x_.size() && x == last_x_) {
    grad = last_grad_;
    return last_value_;
  }
  ++computations_;
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(size());
  try {
    const GpParams p = unpack(x);
    if (p.kernel.s() > 0.0 && p.sigma > 0.0 && std::isfinite(p.kernel.omega()) && p.kernel.omega() > 0.0) {
      NllGradient out = objective_->nll_grad(p);
      if (std::isfinite(out.value) && out.gradient.allFinite()) {
        value = out.value;
        g = std::move(out.gradient);
      }
    }
  } catch (const NumericError&) {
  } catch (const InvalidInput&) {
    // exp under/overflow of a log-parameter
  }
  if (!std::isfinite(value)) {
    ++failures_;
    g.setZero();
  }
  has_last_ = true;
  last_x_ = x;
  last_value_ = value;
  last_grad_ = g;
  grad = g;
  return value;
}

double max_pair_distance(const ObservationSet& obs) {
  double r = 0.0;
  const int d = obs.d;
  for (const auto& snap : obs.snapshots)
    for (int i = 0; i < obs.n; ++i)
      for (int k = i + 1; k < obs.n; ++k)
        r = std::max(r, (snap.state.x.segment(k * d, d) - snap.state.x.segment(i * d, d)).norm());
  return r;
}

TrainedModel fit(const ObservationSet& obs, const Skeleton& skeleton, const FitConfig& config) {
  config.validate();
  skeleton.check(obs);
  auto objective = std::make_shared<const GpObjective>(obs, config.row_cap);

  const Eigen::Index na = static_cast<Eigen::Index>(skeleton.force.param_count());
  Eigen::VectorXd alpha0 = Eigen::VectorXd::Constant(na, 0.5);
  if (config.alpha0) {
    if (config.alpha0->size() != na)
      throw InvalidInput("initial force parameters have length " + std::to_string(config.alpha0->size()) +
                         ", expected " + std::to_string(na));
    alpha0 = *config.alpha0;
  }
  const double r_max = max_pair_distance(obs);
  const double omega0 = config.omega0 ? *config.omega0 : (r_max > 0.0 ? r_max / 4.0 : 1.0);
  const GpParams init{skeleton.force.unpack(alpha0), MaternKernel(skeleton.nu, config.s0, omega0),
                      config.sigma0};

  LbfgsOptions lopt;
  lopt.max_evaluations = config.max_evaluations;
  lopt.gradient_tolerance = config.gradient_tolerance;
  lopt.memory = config.memory;

  std::optional<LbfgsResult> best;
  int best_restart = 0;
  std::ostringstream diagnostics;
  for (int r = 0; r < config.restarts; ++r) {
    LineSearchObjective lso(objective, skeleton);
    Eigen::VectorXd x0 = lso.pack(init);
    if (r > 0) {
      Rng rng = Rng::stream(config.seed, "restart", static_cast<std::uint64_t>(r));
      for (Eigen::Index k = 0; k < x0.size(); ++k) x0(k) += 0.3 * rng.normal();
    }
    LbfgsResult res = lbfgs_minimize(std::ref(lso), x0, lopt);
    if (res.evaluations == 0) {
      // Zero budget: report the initial point, evaluated outside the budget.
      Eigen::VectorXd g;
      res.value = lso(x0, g);
      res.gradient = g;
      res.trace.push_back({0, 0, res.value, g.lpNorm<Eigen::Infinity>()});
    }
    diagnostics << " restart " << r << ": value " << res.value << " after " << res.evaluations
                << " evaluations (" << lso.failures() << " non-finite), " << res.message << ";";
    if (std::isfinite(res.value) && (!best || res.value < best->value)) {
      best = std::move(res);
      best_restart = r;
    }
  }
  if (!best) throw OptimizationFailure("no restart reached a finite likelihood;" + diagnostics.str());

  LineSearchObjective lso(objective, skeleton);
  TrainedModel model;
  model.skeleton = skeleton;
  const GpParams p = lso.unpack(best->x);
  model.force = p.force;
  model.kernel = p.kernel;
  model.sigma = p.sigma;
  model.nll = best->value;
  model.iterations = best->iterations;
  model.evaluations = best->evaluations;
  model.gradient_norm = best->gradient.lpNorm<Eigen::Infinity>();
  model.converged = best->converged;
  model.budget_exhausted = best->budget_exhausted;
  model.stalled = best->stalled;
  model.restart = best_restart;
  model.trace = std::move(best->trace);
  model.data_hash = obs.hash();
  model.cache = std::make_shared<const CovarianceCache>(CovarianceCache::build(obs, p, config.row_cap));
  return model;
}

namespace {

json force_to_json(const NonCollectiveForce& f) {
  json j;
  j["family"] = f.family_name();
  const Eigen::VectorXd p = f.pack();
  j["params"] = std::vector<double>(p.data(), p.data() + p.size());
  j["param_names"] = f.param_names();
  if (f.family() == NonCollectiveForce::Family::StubbornOpinion) j["stubborn_agents"] = f.stubborn_agents();
  return j;
}

NonCollectiveForce force_from_json(const json& j) {
  const auto family = j.at("family").get<std::string>();
  const auto params = j.at("params").get<std::vector<double>>();
  auto need = [&](std::size_t n) {
    if (params.size() != n) throw InvalidInput("force '" + family + "' expects " + std::to_string(n) + " parameters");
  };
  if (family == "zero") {
    need(0);
    return NonCollectiveForce::zero();
  }
  if (family == "stubborn") {
    const auto agents = j.at("stubborn_agents").get<std::vector<int>>();
    need(agents.size() + 1);
    return NonCollectiveForce::stubborn({params.begin(), params.end() - 1}, params.back(), agents);
  }
  if (family == "self_propulsion") {
    need(2);
    return NonCollectiveForce::self_propulsion(params[0], params[1]);
  }
  if (family == "rayleigh") {
    need(2);
    return NonCollectiveForce::rayleigh(params[0], params[1]);
  }
  throw InvalidInput("unknown force family '" + family + "'");
}

}  // namespace

std::string model_to_json(const TrainedModel& m) {
  json j;
  j["format"] = "ipgp.model/1";
  j["skeleton"] = {{"d", m.skeleton.d},
                   {"N", m.skeleton.n},
                   {"order", to_string(m.skeleton.order)},
                   {"interaction", to_string(m.skeleton.interaction)},
                   {"force", force_to_json(m.skeleton.force)}};
  j["alpha"] = force_to_json(m.force);
  j["kernel"] = {{"nu", smoothness_value(m.kernel.nu())}, {"s", m.kernel.s()}, {"omega", m.kernel.omega()}};
  j["sigma"] = m.sigma;
  j["nll"] = m.nll;
  json trace = json::array();
  for (const auto& t : m.trace)
    trace.push_back({{"iteration", t.iteration}, {"evaluations", t.evaluations}, {"nll", t.value},
                     {"grad_inf", t.gradient_norm}});
  j["trace"] = {{"iterations", m.iterations},
                {"evaluations", m.evaluations},
                {"grad_inf", m.gradient_norm},
                {"converged", m.converged},
                {"budget_exhausted", m.budget_exhausted},
                {"stalled", m.stalled},
                {"restart", m.restart},
                {"iterates", trace}};
  j["data_hash"] = m.data_hash;
  return j.dump(1) + "\n";
}

TrainedModel model_from_json(const std::string& text, const ObservationSet& obs) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what(), e.byte);
  }
  TrainedModel m;
  try {
    if (j.at("format").get<std::string>() != "ipgp.model/1") throw InvalidInput("unsupported model format");
    const json& sk = j.at("skeleton");
    m.skeleton.d = sk.at("d").get<int>();
    m.skeleton.n = sk.at("N").get<int>();
    m.skeleton.order = order_from_string(sk.at("order").get<std::string>());
    m.skeleton.interaction = interaction_from_string(sk.at("interaction").get<std::string>());
    m.skeleton.force = force_from_json(sk.at("force"));
    m.force = force_from_json(j.at("alpha"));
    const json& k = j.at("kernel");
    m.skeleton.nu = smoothness_from_value(k.at("nu").get<double>());
    m.kernel = MaternKernel(m.skeleton.nu, k.at("s").get<double>(), k.at("omega").get<double>());
    m.sigma = j.at("sigma").get<double>();
    m.nll = j.at("nll").get<double>();
    const json& tr = j.at("trace");
    m.iterations = tr.at("iterations").get<int>();
    m.evaluations = tr.at("evaluations").get<int>();
    m.gradient_norm = tr.at("grad_inf").get<double>();
    m.converged = tr.at("converged").get<bool>();
    m.budget_exhausted = tr.at("budget_exhausted").get<bool>();
    m.stalled = tr.at("stalled").get<bool>();
    m.restart = tr.at("restart").get<int>();
    for (const auto& t : tr.at("iterates"))
      m.trace.push_back({t.at("iteration").get<int>(), t.at("evaluations").get<int>(),
                         t.at("nll").get<double>(), t.at("grad_inf").get<double>()});
    m.data_hash = j.at("data_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("model JSON: ") + e.what());
  }
  if (m.data_hash != obs.hash())
    throw ContractError("model was trained on data " + m.data_hash + " but the supplied data hash to " + obs.hash());
  m.skeleton.check(obs);
  m.cache = std::make_shared<const CovarianceCache>(CovarianceCache::build(obs, m.params()));
  return m;
}

}  // namespace ipgp
