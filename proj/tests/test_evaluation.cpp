#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ipgp/errors.hpp"
#include "ipgp/evaluation.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/radial.hpp"
#include "oracles.hpp"

using namespace ipgp;

namespace {

ParticleSystemSpec line_system(int n) {
  ParticleSystemSpec spec;
  spec.d = 1;
  spec.n = n;
  spec.order = Order::First;
  spec.kernel = radial::cucker_smale(0.5);
  spec.mu0 = {0.0, 1.0, 0.0, 0.0};
  return spec;
}

std::vector<State> path(const Eigen::VectorXd& x0, const Eigen::VectorXd& v, const std::vector<double>& ts) {
  std::vector<State> out;
  for (double t : ts) out.push_back(State{x0 + t * v, Eigen::VectorXd(), t});
  return out;
}

}  // namespace

TEST_CASE("flocking score of aligned and opposed groups") {
  Eigen::VectorXd v(6);
  v << 1, 1, 2, 2, 0.5, 0.5;
  auto s = flocking_score(v, 2);
  CHECK(s.score == doctest::Approx(1.0));
  CHECK(s.direction(0) == doctest::Approx(std::sqrt(0.5)));

  Eigen::VectorXd opp(4);
  opp << 1, 0, -1, 0;
  s = flocking_score(opp, 2);
  CHECK(s.score == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s.direction(0) == doctest::Approx(1.0));  // sign fixed by the first agent

  Eigen::VectorXd still(4);
  still << 1, 0, 0, 0;
  CHECK_THROWS_WITH_AS(flocking_score(still, 2), doctest::Contains("agent 1"), InvalidInput);
}

TEST_CASE("flocking direction ignores positive rescaling of the velocities") {
  Eigen::VectorXd v(8);
  v << 1.0, 0.2, 0.7, -0.3, 0.9, 0.4, -0.1, 1.0;
  Eigen::VectorXd w = v;
  const double scales[] = {3.0, 0.01, 7.5, 1.2};
  for (int i = 0; i < 4; ++i) w.segment(2 * i, 2) *= scales[i];
  const auto a = flocking_score(v, 2), b = flocking_score(w, 2);
  CHECK((a.direction - b.direction).norm() < 1e-12);
  CHECK(a.score == doctest::Approx(b.score).epsilon(1e-12));
  CHECK(a.score >= -1.0);
  CHECK(a.score <= 1.0);
}

TEST_CASE("trajectory error is a pseudometric on sampled paths") {
  const auto ts = linspace(0.0, 2.0, 21);
  Eigen::VectorXd x0(2), v1(2), v2(2), v3(2);
  x0 << 0.0, 1.0;
  v1 << 1.0, 0.0;
  v2 << 0.5, 0.5;
  v3 << -1.0, 2.0;
  const auto a = path(x0, v1, ts), b = path(x0, v2, ts), c = path(x0, v3, ts);
  CHECK(trajectory_error(a, a) == 0.0);
  CHECK(trajectory_error(a, b) == trajectory_error(b, a));
  CHECK(trajectory_error(a, c) <= trajectory_error(a, b) + trajectory_error(b, c) + 1e-15);
  // sup over t of t * |v1 - v2| is reached at t = 2.
  CHECK(trajectory_error(a, b) == doctest::Approx(2.0 * (v1 - v2).norm()));
  CHECK(trajectory_error(a, b, 0.0, 1.0) == doctest::Approx((v1 - v2).norm()));
  auto shifted = b;
  shifted[3].t += 0.01;
  CHECK_THROWS_AS(trajectory_error(a, shifted), InvalidInput);
}

TEST_CASE("empirical measures are normalized") {
  const auto rho = empirical_rho(line_system(4), 50, 3, 1.0, 40, 1);
  double m1 = 0.0, m2 = 0.0;
  for (double p : rho.rho) m1 += p;
  for (double p : rho.rho_tilde) m2 += p;
  CHECK(m1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho.samples == 50 * 3 * 6);
  CHECK(rho.edges.size() == 41);
}

TEST_CASE("two uniform agents give the triangular distance law") {
  // |x1 - x2| for independent Unif[0,1] has CDF 2r - r^2.
  const auto rho = empirical_rho(line_system(2), 2000, 1, 0.0, 200, 7);
  double cdf = 0.0, ks = 0.0;
  for (std::size_t b = 0; b < rho.rho.size(); ++b) {
    cdf += rho.rho[b];
    const double r = rho.edges[b + 1];
    ks = std::max(ks, std::abs(cdf - (2.0 * r - r * r)));
  }
  CHECK(ks <= 0.05);
}

TEST_CASE("kernel error metrics vanish for the truth and scale with a relative bias") {
  const auto rho = empirical_rho(line_system(3), 100, 1, 0.0, 50, 3);
  const RadialFunction phi = radial::cucker_smale(0.5);
  KernelEstimate est;
  est.grid = linspace(0.0, rho.r_max(), 300);
  est.variance.assign(est.grid.size(), 0.0);
  for (double r : est.grid) est.mean.push_back(phi(r));
  auto e = error_metrics(est, phi, rho);
  CHECK(e.rel_linf == doctest::Approx(0.0).epsilon(1e-15));
  // The estimate is interpolated linearly to the bin centres: O(h^2) error.
  CHECK(e.rel_l2_rho_tilde < 1e-5);
  for (auto& v : est.mean) v *= 1.1;
  e = error_metrics(est, phi, rho);
  CHECK(e.rel_linf == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(e.rel_l2_rho_tilde == doctest::Approx(0.1).epsilon(1e-4));
  CHECK_THROWS_AS(error_metrics(est, radial::constant(0.0), rho), NumericError);
}

TEST_CASE("kernel curve CSV header and clipping") {
  const auto spec = line_system(4);
  const auto obs = generate_observations(spec, 2, 2, 1.0, 0.05, 5);
  FitConfig cfg;
  cfg.max_evaluations = 0;
  const auto model = fit(obs, skeleton_of(spec, Smoothness::ThreeHalves), cfg);
  const auto est = estimate_kernel_curve(model, obs, linspace(0.0, 1.0, 11), 1.0);
  std::ostringstream out;
  write_kernel_csv(out, est);
  CHECK(out.str().rfind("r,mean,sd,lo,hi\n", 0) == 0);
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    CHECK(est.variance[k] >= 0.0);
    CHECK(est.lo(k) <= est.mean[k]);
    CHECK(est.hi(k) >= est.mean[k]);
  }
  CHECK_THROWS_AS(estimate_kernel_curve(model, obs, linspace(0.0, 2.0, 11), 1.0), InvalidInput);
}

TEST_CASE("appending a snapshot never increases the posterior variance") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = line_system(3 + static_cast<int>(seed % 3));
    const auto full = generate_observations(spec, 1, 3, 1.0, 0.1, seed);
    const auto part = oracle::drop_last_snapshot(full);
    const GpParams p{NonCollectiveForce::zero(), MaternKernel(Smoothness::ThreeHalves, 1.0, 0.4), 0.1};
    const auto big = CovarianceCache::build(full, p), small = CovarianceCache::build(part, p);
    for (double r : linspace(0.0, 1.5, 31)) {
      const double vb = big.posterior(r).variance, vs = small.posterior(r).variance;
      CHECK(vb <= vs + 1e-10);
      CHECK(vb >= -1e-10);
      CHECK(vs <= p.kernel.variance() + 1e-10);
    }
  }
}

TEST_CASE("fast learned kernel follows the posterior mean") {
  const auto spec = line_system(4);
  const auto obs = generate_observations(spec, 2, 3, 1.0, 0.05, 8);
  const auto cache = CovarianceCache::build(obs, {NonCollectiveForce::zero(), MaternKernel(Smoothness::ThreeHalves, 1.0, 0.5), 0.05});
  const auto fast = fast_kernel(cache, 2.0);
  double worst = 0.0;
  for (double r : linspace(0.0, 2.0, 157)) worst = std::max(worst, std::abs(fast(r) - cache.posterior_mean(r)));
  CHECK(worst < 1e-4);
  CHECK(fast(3.0) == cache.posterior_mean(3.0));
}
