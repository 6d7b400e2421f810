#include "ipgp/evaluation.hpp"

#include <algorithm>
#include <cmath>

// pchip.hpp in Boost 1.74 calls isnan unqualified.
#include <boost/math/special_functions/fpclassify.hpp>
namespace boost::math::interpolators {
using boost::math::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ipgp/errors.hpp"
#include "ipgp/parallel.hpp"

namespace ipgp {

double KernelEstimate::sd(std::size_t k) const { return std::sqrt(std::max(0.0, variance[k])); }

KernelEstimate estimate_kernel_curve(const TrainedModel& model, const ObservationSet& obs,
                                     const std::vector<double>& grid, double max_r) {
  if (!model.cache) throw ContractError("model has no posterior cache");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !(grid[k] <= max_r))
      throw InvalidInput("kernel grid point " + std::to_string(grid[k]) + " outside [0, max_r]");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw InvalidInput("kernel grid must be strictly increasing");
  }
  KernelEstimate est;
  est.grid = grid;
  est.mean.reserve(grid.size());
  est.variance.reserve(grid.size());
  if (cache_fingerprint(obs, model.kernel) != model.cache->fingerprint())
    throw ContractError("model cache does not belong to these observations");
  for (double r : grid) {
    const PosteriorPoint p = model.cache->posterior(r);
    est.mean.push_back(p.mean);
    if (p.variance < 0.0) {
      ++est.clipped;
      est.variance.push_back(0.0);
    } else {
      est.variance.push_back(p.variance);
    }
  }
  return est;
}

void write_kernel_csv(std::ostream& out, const KernelEstimate& est) {
  out << "r,mean,sd,lo,hi\n";
  char buf[160];
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", est.grid[k], est.mean[k], est.sd(k),
                  est.lo(k), est.hi(k));
    out << buf;
  }
}

std::vector<double> EmpiricalMeasure::centers() const {
  std::vector<double> c(rho.size());
  for (std::size_t b = 0; b < c.size(); ++b) c[b] = 0.5 * (edges[b] + edges[b + 1]);
  return c;
}

EmpiricalMeasure empirical_rho(const ParticleSystemSpec& spec, int n_traj, int l, double t_end,
                               int bins, std::uint64_t seed, const IntegratorOptions& options,
                               int threads) {
  if (n_traj < 1) throw InvalidInput("empirical measure needs at least one trajectory");
  if (l < 1) throw InvalidInput("empirical measure needs L >= 1");
  if (bins < 1) throw InvalidInput("empirical measure needs at least one bin");
  spec.validate();
  const auto times = linspace(0.0, t_end, l);
  const int d = spec.d, n = spec.n;

  std::vector<std::vector<double>> dist(static_cast<std::size_t>(n_traj));
  std::vector<char> failed(static_cast<std::size_t>(n_traj), 0);
  parallel_for(static_cast<std::size_t>(n_traj), threads, [&](std::size_t m) {
    Rng rng = Rng::stream(seed, "rho", m);
    const State s0 = spec.mu0.sample(rng, d, n, spec.order);
    std::vector<State> traj;
    try {
      traj = l == 1 ? std::vector<State>{s0} : integrate(spec, s0, times, options);
    } catch (const IntegrationFailure&) {
      failed[m] = 1;
      return;
    }
    auto& out = dist[m];
    out.reserve(traj.size() * static_cast<std::size_t>(n * (n - 1) / 2));
    for (const State& s : traj)
      for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) out.push_back((s.x.segment(k * d, d) - s.x.segment(i * d, d)).norm());
  });

  EmpiricalMeasure mu;
  double r_max = 0.0;
  for (std::size_t m = 0; m < dist.size(); ++m) {
    mu.failed_trajectories += failed[m];
    for (double r : dist[m]) r_max = std::max(r_max, r);
  }
  if (mu.failed_trajectories == n_traj) throw IntegrationFailure("every trajectory of the ensemble failed", 0.0);
  if (!(r_max > 0.0)) r_max = 1.0;
  mu.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) mu.edges[static_cast<std::size_t>(b)] = r_max * b / bins;
  mu.edges.back() = r_max;
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0), weight(static_cast<std::size_t>(bins), 0.0);
  double total_w = 0.0;
  for (const auto& rs : dist)
    for (double r : rs) {
      const auto b = std::min<std::size_t>(static_cast<std::size_t>(bins) - 1,
                                           static_cast<std::size_t>(r / r_max * bins));
      count[b] += 1.0;
      weight[b] += r * r;
      total_w += r * r;
      ++mu.samples;
    }
  mu.rho.resize(count.size());
  mu.rho_tilde.assign(count.size(), 0.0);
  for (std::size_t b = 0; b < count.size(); ++b) {
    mu.rho[b] = count[b] / static_cast<double>(mu.samples);
    if (total_w > 0.0) mu.rho_tilde[b] = weight[b] / total_w;
  }
  return mu;
}

namespace {

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double r) {
  if (r <= x.front()) return y.front();
  if (r >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double w = (r - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - w) * y[k - 1] + w * y[k];
}

}  // namespace

KernelErrors error_metrics(const KernelEstimate& est, const RadialFunction& true_phi,
                           const EmpiricalMeasure& rho) {
  const double r_max = rho.r_max();
  if (est.grid.empty() || est.grid.front() > 1e-12 * r_max || est.grid.back() < r_max * (1.0 - 1e-12))
    throw InvalidInput("kernel estimate grid must cover [0, R]");
  double num_inf = 0.0, den_inf = 0.0;
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    if (est.grid[k] > r_max * (1.0 + 1e-12)) break;
    const double phi = true_phi(est.grid[k]);
    num_inf = std::max(num_inf, std::abs(est.mean[k] - phi));
    den_inf = std::max(den_inf, std::abs(phi));
  }
  double num_l2 = 0.0, den_l2 = 0.0;
  const auto centers = rho.centers();
  for (std::size_t b = 0; b < centers.size(); ++b) {
    if (rho.rho_tilde[b] <= 0.0) continue;
    const double phi = true_phi(centers[b]);
    const double diff = interpolate(est.grid, est.mean, centers[b]) - phi;
    num_l2 += rho.rho_tilde[b] * diff * diff;
    den_l2 += rho.rho_tilde[b] * phi * phi;
  }
  if (!(den_inf > 0.0) || !(den_l2 > 0.0))
    throw NumericError("relative kernel error undefined: true kernel vanishes on the support", 0.0);
  return {num_inf / den_inf, std::sqrt(num_l2 / den_l2)};
}

double trajectory_error(const std::vector<State>& truth, const std::vector<State>& pred, double t0,
                        double t1) {
  if (truth.size() != pred.size()) throw InvalidInput("trajectories have different lengths");
  double worst = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (std::abs(truth[k].t - pred[k].t) > 1e-12 * std::max(1.0, std::abs(truth[k].t)))
      throw InvalidInput("trajectories are sampled at different times");
    if (truth[k].x.size() != pred[k].x.size()) throw InvalidInput("trajectory states differ in dimension");
    const double t = truth[k].t;
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    worst = std::max(worst, (truth[k].x - pred[k].x).norm());
  }
  return worst;
}

FlockingScore flocking_score(const Eigen::VectorXd& velocities, int d) {
  if (d < 1 || velocities.size() % d != 0 || velocities.size() == 0)
    throw InvalidInput("velocity vector length is not a multiple of d");
  const Eigen::Index n = velocities.size() / d;
  Eigen::MatrixXd units(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = velocities.segment(i * d, d).norm();
    if (!(norm > 0.0)) throw InvalidInput("agent " + std::to_string(i) + " has zero velocity");
    units.col(i) = velocities.segment(i * d, d) / norm;
  }
  const Eigen::MatrixXd gram = units * units.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  FlockingScore out;
  const auto& ev = eig.eigenvalues();
  out.direction = eig.eigenvectors().col(d - 1);
  if (d > 1 && ev(d - 1) - ev(d - 2) <= 1e-12 * std::max(1.0, ev(d - 1))) {
    out.degenerate = true;
    out.direction = units.col(0);
  }
  if (out.direction.dot(units.col(0)) < 0.0) out.direction = -out.direction;
  out.score = (out.direction.transpose() * units).sum() / static_cast<double>(n);
  return out;
}

RadialFunction fast_kernel(const CovarianceCache& cache, double r_table, int points) {
  if (!(r_table > 0.0) || points < 4) throw InvalidInput("fast kernel needs r_table > 0 and >= 4 points");
  std::vector<double> x(static_cast<std::size_t>(points)), y(x.size());
  for (int k = 0; k < points; ++k) {
    x[static_cast<std::size_t>(k)] = r_table * k / (points - 1);
    y[static_cast<std::size_t>(k)] = cache.posterior_mean(x[static_cast<std::size_t>(k)]);
  }
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
  auto interp = std::make_shared<Pchip>(std::move(x), std::move(y));
  // The cache is shared by the model; keep a copy so the kernel stands alone.
  auto exact = std::make_shared<CovarianceCache>(cache);
  return [interp, exact, r_table](double r) {
    return r <= r_table ? (*interp)(r) : exact->posterior_mean(r);
  };
}

ParticleSystemSpec learned_system(const TrainedModel& model, const ParticleSystemSpec& truth,
                                  double r_table) {
  if (!model.cache) throw ContractError("model has no posterior cache");
  if (truth.d != model.skeleton.d || truth.n != model.skeleton.n || truth.order != model.skeleton.order)
    throw InvalidInput("model and system disagree on d, N or order");
  ParticleSystemSpec spec = truth;
  spec.force = model.force;
  spec.interaction = model.skeleton.interaction;
  spec.kernel = fast_kernel(*model.cache, r_table);
  return spec;
}

PredictionReport predict_and_score(const TrainedModel& model, const ParticleSystemSpec& truth,
                                   const std::vector<State>& initial, const PredictionOptions& opt,
                                   const EmpiricalMeasure* rho, const ObservationSet* obs) {
  if (!(opt.t_future >= opt.t_end) || !(opt.t_end > 0.0)) throw InvalidInput("need 0 < T <= T_f");
  if (opt.samples < 2) throw InvalidInput("need at least two comparison times");
  double r_scale = rho ? rho->r_max() : 0.0;
  if (!(r_scale > 0.0)) r_scale = obs ? max_pair_distance(*obs) : 0.0;
  if (!(r_scale > 0.0)) r_scale = 1.0;
  const ParticleSystemSpec learned = learned_system(model, truth, 1.5 * r_scale);

  // Comparison grid on [0, T_f] that contains T.
  std::vector<double> times = linspace(0.0, opt.t_future, opt.samples);
  if (std::find(times.begin(), times.end(), opt.t_end) == times.end()) {
    times.push_back(opt.t_end);
    std::sort(times.begin(), times.end());
  }

  PredictionReport rep;
  const std::size_t count = initial.size();
  rep.train_errors.assign(count, 0.0);
  rep.future_errors.assign(count, 0.0);
  std::vector<double> flock(count, 0.0), true_flock(count, 0.0);
  parallel_for(count, opt.threads, [&](std::size_t k) {
    const auto a = integrate(truth, initial[k], times, opt.integrator);
    const auto b = integrate(learned, initial[k], times, opt.integrator);
    rep.train_errors[k] = trajectory_error(a, b, 0.0, opt.t_end);
    rep.future_errors[k] = trajectory_error(a, b, opt.t_end, opt.t_future);
    if (truth.order == Order::Second) {
      flock[k] = flocking_score(b.back().v, truth.d).score;
      true_flock[k] = flocking_score(a.back().v, truth.d).score;
    }
  });
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  rep.mean_train_error = mean(rep.train_errors);
  rep.mean_future_error = mean(rep.future_errors);
  if (truth.order == Order::Second && count > 0) {
    rep.final_flocking = mean(flock);
    rep.true_final_flocking = mean(true_flock);
  }
  if (rho && obs && truth.kernel) {
    const auto grid = linspace(0.0, rho->r_max(), 1000);
    rep.kernel = error_metrics(estimate_kernel_curve(model, *obs, grid), truth.kernel, *rho);
  }
  return rep;
}

std::string prediction_report_json(const PredictionReport& r) {
  nlohmann::json j;
  j["train_errors"] = r.train_errors;
  j["future_errors"] = r.future_errors;
  j["mean_train_error"] = r.mean_train_error;
  j["mean_future_error"] = r.mean_future_error;
  if (r.kernel) j["kernel_errors"] = {{"rel_linf", r.kernel->rel_linf}, {"rel_l2_rho_tilde", r.kernel->rel_l2_rho_tilde}};
  if (r.final_flocking) j["final_flocking_score"] = *r.final_flocking;
  if (r.true_final_flocking) j["true_final_flocking_score"] = *r.true_final_flocking;
  return j.dump(1) + "\n";
}

}  // namespace ipgp
