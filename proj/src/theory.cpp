#include "ipgp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>

#include "ipgp/errors.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/parallel.hpp"
#include "ipgp/radial.hpp"
#include "ipgp/rng.hpp"

namespace ipgp {

namespace {

Eigen::VectorXd pair_vector(const ObservationSet& obs, const State& s, int i, int j) {
  const int d = obs.d;
  const Eigen::VectorXd& z = obs.interaction == InteractionVariable::VelocityDifference ? s.v : s.x;
  return z.segment(j * d, d) - z.segment(i * d, d);
}

double pair_distance(const ObservationSet& obs, const State& s, int i, int j) {
  return (s.x.segment(j * obs.d, obs.d) - s.x.segment(i * obs.d, obs.d)).norm();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace

double KrrSolution::operator()(double r) const {
  double acc = 0.0;
  for (std::size_t q = 0; q < distances.size(); ++q) {
    const double c = coefficients(static_cast<Eigen::Index>(q));
    if (c != 0.0) acc += c * kernel.eval(distances[q], r);
  }
  return acc;
}

KrrSolution krr_fit(const ObservationSet& obs, const MaternKernel& kernel, double lambda,
                    const NonCollectiveForce& force, Eigen::Index row_cap) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("KRR needs a finite lambda > 0");
  obs.validate();
  const int d = obs.d, n = obs.n;
  const Eigen::VectorXd v = stacked_targets(obs) - stacked_force(obs, force);
  Eigen::MatrixXd c = assemble_ff_cov(obs, kernel, row_cap);
  c.diagonal().array() += lambda * n * obs.m * obs.l;

  KrrSolution sol;
  sol.lambda = lambda;
  sol.kernel = kernel;
  const Eigen::LLT<Eigen::MatrixXd> llt = factorize_with_jitter(c, sol.jitter);
  const Eigen::VectorXd beta = llt.solve(v);

  const std::size_t snaps = obs.snapshots.size();
  const std::size_t per = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  sol.distances.assign(snaps * per, 0.0);
  sol.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(snaps * per));
  for (std::size_t b = 0; b < snaps; ++b) {
    const State& s = obs.snapshots[b].state;
    for (int i = 0; i < n; ++i) {
      const auto bi = beta.segment(static_cast<Eigen::Index>(b) * d * n + i * d, d);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::size_t q = b * per + static_cast<std::size_t>(i * n + j);
        sol.distances[q] = pair_distance(obs, s, i, j);
        sol.coefficients(static_cast<Eigen::Index>(q)) = pair_vector(obs, s, i, j).dot(bi) / n;
      }
    }
  }
  return sol;
}

double krr_objective(const ObservationSet& obs, const KrrSolution& solution,
                     const Eigen::VectorXd& coefficients, const NonCollectiveForce& force) {
  const auto& r = solution.distances;
  if (static_cast<std::size_t>(coefficients.size()) != r.size())
    throw InvalidInput("coefficient vector does not match the pair expansion");
  const Eigen::Index q = coefficients.size();
  Eigen::MatrixXd g(q, q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b)
      g(a, b) = solution.kernel.eval(r[static_cast<std::size_t>(a)], r[static_cast<std::size_t>(b)]);

  const int d = obs.d, n = obs.n;
  const Eigen::VectorXd v = stacked_targets(obs) - stacked_force(obs, force);
  const auto phi_at = [&](double rr) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < q; ++a) acc += coefficients(a) * solution.kernel.eval(r[static_cast<std::size_t>(a)], rr);
    return acc;
  };
  double loss = 0.0;
  for (std::size_t b = 0; b < obs.snapshots.size(); ++b) {
    const State& s = obs.snapshots[b].state;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
      for (int j = 0; j < n; ++j)
        if (j != i) f += phi_at(pair_distance(obs, s, i, j)) * pair_vector(obs, s, i, j);
      f /= n;
      loss += (f - v.segment(static_cast<Eigen::Index>(b) * d * n + i * d, d)).squaredNorm();
    }
  }
  loss /= static_cast<double>(obs.m) * obs.l * n;
  return loss + solution.lambda * coefficients.dot(g * coefficients);
}

GpKrrReport check_gp_krr_equivalence(const ObservationSet& obs, const MaternKernel& kernel,
                                     double sigma, double lambda, const std::vector<double>& grid,
                                     const NonCollectiveForce& force, bool mis_scaled) {
  if (!(sigma > 0.0)) throw InvalidInput("GP/KRR comparison needs sigma > 0");
  const KrrSolution krr = krr_fit(obs, kernel, lambda, force);
  const double scale = mis_scaled ? lambda : static_cast<double>(obs.m) * obs.n * obs.l * lambda;
  GpKrrReport rep;
  rep.prior_amplitude = std::sqrt(sigma * sigma * kernel.variance() / scale);
  const CovarianceCache cache =
      CovarianceCache::build(obs, GpParams{force, kernel.with_amplitude(rep.prior_amplitude), sigma});
  for (double r : grid) {
    const double a = krr(r), b = cache.posterior_mean(r);
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(a - b));
    rep.krr_sup = std::max(rep.krr_sup, std::abs(a));
  }
  return rep;
}

ObservationSet seeded_instance(std::uint64_t seed, double sigma) {
  Rng rng = Rng::stream(seed, "theory");
  ParticleSystemSpec spec;
  spec.n = 2 + static_cast<int>(rng.uniform() * 4.0);
  spec.d = 1 + static_cast<int>(rng.uniform() * 2.0);
  spec.order = Order::First;
  spec.force = NonCollectiveForce::zero();
  std::vector<double> centers(3), weights(3);
  for (int k = 0; k < 3; ++k) {
    centers[static_cast<std::size_t>(k)] = rng.uniform(0.0, 2.0);
    weights[static_cast<std::size_t>(k)] = rng.normal();
  }
  spec.kernel = radial::matern_span(centers, weights, 1.5, 1.0, 0.5);
  spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
  const int m = 1 + static_cast<int>(rng.uniform() * 3.0);
  const int l = 1 + static_cast<int>(rng.uniform() * 3.0);
  return generate_observations(spec, m, l, 1.0, sigma, seed);
}

CoercivityReport estimate_coercivity(const ParticleSystemSpec& spec, const CoercivityOptions& opt,
                                     std::vector<std::pair<std::string, RadialFunction>> extra) {
  spec.validate();
  if (spec.interaction != InteractionVariable::PositionDifference)
    throw InvalidInput("coercivity estimate needs a position-difference system");
  if (opt.samples < 2) throw InvalidInput("coercivity estimate needs at least two samples");
  if (opt.l < 1) throw InvalidInput("coercivity estimate needs L >= 1");
  const int d = spec.d, n = spec.n;
  const auto times = linspace(0.0, opt.t_end, opt.l);

  CoercivityReport rep;
  std::vector<State> states;
  states.reserve(static_cast<std::size_t>(opt.samples) * static_cast<std::size_t>(opt.l));
  std::vector<std::size_t> sample_of;
  double r_max = 0.0;
  for (int k = 0; k < opt.samples; ++k) {
    Rng rng = Rng::stream(opt.seed, "coercivity", static_cast<std::uint64_t>(k));
    const State s0 = spec.mu0.sample(rng, d, n, spec.order);
    std::vector<State> traj;
    try {
      traj = opt.l == 1 ? std::vector<State>{s0} : integrate(spec, s0, times, opt.integrator);
    } catch (const IntegrationFailure&) {
      ++rep.failed_trajectories;
      continue;
    }
    for (const State& s : traj) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          r_max = std::max(r_max, (s.x.segment(j * d, d) - s.x.segment(i * d, d)).norm());
      states.push_back(s);
      sample_of.push_back(static_cast<std::size_t>(rep.samples));
    }
    ++rep.samples;
  }
  if (rep.samples < 2) throw IntegrationFailure("too few coercivity samples integrated", 0.0);
  if (!(r_max > 0.0)) r_max = 1.0;

  std::vector<std::pair<std::string, RadialFunction>> probes;
  probes.emplace_back("constant 1", radial::constant(1.0));
  probes.emplace_back("system kernel", spec.kernel);
  Rng prng = Rng::stream(opt.seed, "theory-probes");
  const double nu = smoothness_value(opt.probe_kernel.nu());
  for (int p = 0; p < opt.random_probes; ++p) {
    std::vector<double> centers(3), weights(3);
    for (int k = 0; k < 3; ++k) {
      centers[static_cast<std::size_t>(k)] = prng.uniform(0.0, r_max);
      weights[static_cast<std::size_t>(k)] = prng.normal();
    }
    char label[64];
    std::snprintf(label, sizeof label, "matern span #%d", p);
    probes.emplace_back(label, radial::matern_span(centers, weights, nu, opt.probe_kernel.s(),
                                                  opt.probe_kernel.omega()));
  }
  for (auto& e : extra) probes.push_back(std::move(e));

  rep.upper_bound = static_cast<double>(n - 1) / n;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  const double pairs = 0.5 * n * (n - 1);
  const auto k_samples = static_cast<std::size_t>(rep.samples);
  for (const auto& [label, phi] : probes) {
    std::vector<double> num(k_samples, 0.0), den(k_samples, 0.0);
    for (std::size_t t = 0; t < states.size(); ++t) {
      const State& s = states[t];
      double f2 = 0.0, p2 = 0.0;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const Eigen::VectorXd u = s.x.segment(j * d, d) - s.x.segment(i * d, d);
          const double r = u.norm(), v = phi(r);
          f += v * u;
          if (j > i) p2 += v * v * r * r;
        }
        f2 += (f / n).squaredNorm();
      }
      num[sample_of[t]] += f2 / (static_cast<double>(opt.l) * n);
      den[sample_of[t]] += p2 / (static_cast<double>(opt.l) * pairs);
    }
    const double kk = static_cast<double>(k_samples);
    double mn = 0.0, md = 0.0;
    for (std::size_t k = 0; k < k_samples; ++k) {
      mn += num[k];
      md += den[k];
    }
    mn /= kk;
    md /= kk;
    if (!(md > 0.0)) {
      rep.skipped.push_back(label);
      continue;
    }
    CoercivityProbe pr;
    pr.description = label;
    pr.numerator = mn;
    pr.denominator = md;
    pr.ratio = mn / md;
    // Delta-method error of a ratio of means, floored at the rounding of the
    // sums so that exact identities are not judged against a zero error.
    double ss = 0.0;
    for (std::size_t k = 0; k < k_samples; ++k) {
      const double e = num[k] - pr.ratio * den[k];
      ss += e * e;
    }
    const double rounding = 8.0 * std::numeric_limits<double>::epsilon() * pr.ratio * std::sqrt(kk);
    pr.standard_error = std::max(std::sqrt(ss / (kk * (kk - 1.0))) / md, rounding);
    rep.min_ratio = std::min(rep.min_ratio, pr.ratio);
    rep.probes.push_back(std::move(pr));
  }
  if (rep.probes.empty()) rep.min_ratio = 0.0;
  return rep;
}

bool ConvergenceStudy::strictly_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].median_l2 < rows[k - 1].median_l2)) return false;
  return true;
}

ParticleSystemSpec convergence_system() {
  ParticleSystemSpec spec;
  spec.d = 1;
  spec.n = 5;
  spec.order = Order::First;
  spec.force = NonCollectiveForce::zero();
  spec.kernel = radial::matern_span({0.3, 1.0, 1.8}, {1.0, -0.6, 0.8}, 1.5, 1.0, 0.5);
  spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
  return spec;
}

MaternKernel convergence_kernel() { return {Smoothness::ThreeHalves, 10.0, 0.5}; }

ConvergenceStudy convergence_study(const ParticleSystemSpec& spec, const MaternKernel& kernel,
                                   const ConvergenceOptions& opt) {
  ConvergenceStudy study;
  if (opt.m_list.empty()) return study;
  for (std::size_t k = 0; k < opt.m_list.size(); ++k) {
    if (opt.m_list[k] < 1) throw InvalidInput("convergence study needs M >= 1");
    if (k > 0 && opt.m_list[k] <= opt.m_list[k - 1]) throw InvalidInput("M list must be increasing");
  }
  if (opt.seeds < 1) throw InvalidInput("convergence study needs at least one seed");
  if (!(opt.gamma > 0.0)) throw InvalidInput("convergence study needs gamma > 0");

  const EmpiricalMeasure rho = empirical_rho(spec, opt.rho_trajectories, opt.l, opt.t_end, opt.bins,
                                             opt.seed, opt.integrator, opt.threads);
  study.r_max = rho.r_max();
  KernelEstimate est;
  est.grid = linspace(0.0, rho.r_max(), opt.grid_points);
  est.variance.assign(est.grid.size(), 0.0);

  const std::size_t cols = static_cast<std::size_t>(opt.seeds);
  const std::size_t cells = opt.m_list.size() * cols;
  std::vector<KernelErrors> errs(cells);
  parallel_for(cells, opt.threads, [&](std::size_t c) {
    const int m = opt.m_list[c / cols];
    const std::uint64_t data_seed = Rng::stream(opt.seed, "convergence", c % cols).next();
    const ObservationSet obs = generate_observations(spec, m, opt.l, opt.t_end, opt.sigma, data_seed,
                                                     opt.integrator);
    const double lambda = opt.lambda_scale * std::pow(static_cast<double>(m), -1.0 / (2.0 * opt.gamma + 1.0));
    const KrrSolution krr = krr_fit(obs, kernel, lambda);
    KernelEstimate e = est;
    e.mean.resize(e.grid.size());
    for (std::size_t k = 0; k < e.grid.size(); ++k) e.mean[k] = krr(e.grid[k]);
    errs[c] = error_metrics(e, spec.kernel, rho);
  });

  for (std::size_t row = 0; row < opt.m_list.size(); ++row) {
    ConvergenceRow r;
    r.m = opt.m_list[row];
    r.lambda = opt.lambda_scale * std::pow(static_cast<double>(r.m), -1.0 / (2.0 * opt.gamma + 1.0));
    for (std::size_t s = 0; s < cols; ++s) {
      r.l2_errors.push_back(errs[row * cols + s].rel_l2_rho_tilde);
      r.linf_errors.push_back(errs[row * cols + s].rel_linf);
    }
    r.median_l2 = median(r.l2_errors);
    r.median_linf = median(r.linf_errors);
    study.rows.push_back(std::move(r));
  }
  if (study.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(study.rows.size());
    for (const auto& r : study.rows) {
      const double x = std::log(static_cast<double>(r.m)), y = std::log(r.median_l2);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    study.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  return study;
}

std::string coercivity_report_json(const CoercivityReport& rep) {
  nlohmann::ordered_json j;
  j["samples"] = rep.samples;
  j["failed_trajectories"] = rep.failed_trajectories;
  j["min_ratio"] = rep.min_ratio;
  j["upper_bound"] = rep.upper_bound;
  auto& probes = j["probes"] = nlohmann::ordered_json::array();
  for (const auto& p : rep.probes)
    probes.push_back({{"probe", p.description},
                      {"numerator", p.numerator},
                      {"denominator", p.denominator},
                      {"ratio", p.ratio},
                      {"standard_error", p.standard_error}});
  j["skipped"] = rep.skipped;
  return j.dump(2) + "\n";
}

std::string convergence_study_json(const ConvergenceStudy& study) {
  nlohmann::ordered_json j;
  j["r_max"] = study.r_max;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : study.rows)
    rows.push_back({{"m", r.m},
                    {"lambda", r.lambda},
                    {"median_rel_l2", r.median_l2},
                    {"median_rel_linf", r.median_linf},
                    {"rel_l2", r.l2_errors},
                    {"rel_linf", r.linf_errors}});
  j["loglog_slope"] = study.slope ? nlohmann::ordered_json(*study.slope) : nlohmann::ordered_json(nullptr);
  j["strictly_decreasing"] = study.strictly_decreasing();
  return j.dump(2) + "\n";
}

}  // namespace ipgp
