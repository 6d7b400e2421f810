#include <doctest.h>

#include <cmath>

#include "ipgp/errors.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/radial.hpp"
#include "ipgp/rng.hpp"
#include "ipgp/theory.hpp"

using namespace ipgp;

namespace {

const MaternKernel kK(Smoothness::ThreeHalves, 1.0, 0.5);

ObservationSet small_instance(std::uint64_t seed, double sigma = 0.1) {
  ParticleSystemSpec spec;
  spec.d = 2;
  spec.n = 3;
  spec.order = Order::First;
  spec.kernel = radial::cucker_smale(0.5);
  spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
  return generate_observations(spec, 2, 2, 1.0, sigma, seed);
}

}  // namespace

TEST_CASE("KRR coefficients cover every ordered pair") {
  const auto obs = small_instance(1);
  const auto sol = krr_fit(obs, kK, 0.1);
  CHECK(sol.coefficients.size() == obs.m * obs.l * obs.n * obs.n);
  CHECK(sol.distances.size() == static_cast<std::size_t>(sol.coefficients.size()));
  for (double r : linspace(0.0, 3.0, 31)) CHECK(std::isfinite(sol(r)));
  CHECK_THROWS_AS(krr_fit(obs, kK, 0.0), InvalidInput);
  CHECK_THROWS_AS(krr_fit(obs, kK, -1.0), InvalidInput);
}

TEST_CASE("KRR limits: zero targets and infinite regularization") {
  auto obs = small_instance(2);
  for (auto& s : obs.snapshots) s.target.setZero();
  CHECK(krr_fit(obs, kK, 0.1).coefficients.isZero(0.0));

  const auto noisy = small_instance(2);
  const Eigen::MatrixXd kff = assemble_ff_cov(noisy, kK);
  const auto huge = krr_fit(noisy, kK, 1e12 * kff.trace());
  CHECK(huge.coefficients.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(huge(0.5)) < 1e-12);
}

TEST_CASE("KRR solution matches brute-force normal equations on the pair span") {
  // Unknowns a_p, one per unordered pair; the design matrix and Gram matrix
  // are built term by term from the definitions.
  const auto obs = small_instance(3);
  const double lambda = 0.05;
  const int d = obs.d, n = obs.n;
  std::vector<double> r;
  for (const auto& snap : obs.snapshots)
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) r.push_back((snap.state.x.segment(k * d, d) - snap.state.x.segment(i * d, d)).norm());
  const auto p = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(obs.rows(), p), g(p, p);
  Eigen::VectorXd v(obs.rows());
  for (std::size_t b = 0; b < obs.snapshots.size(); ++b) {
    const State& s = obs.snapshots[b].state;
    for (int i = 0; i < n; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(b) * d * n + i * d;
      v.segment(row, d) = obs.snapshots[b].target.segment(i * d, d);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const Eigen::VectorXd u = s.x.segment(j * d, d) - s.x.segment(i * d, d);
        for (Eigen::Index q = 0; q < p; ++q) a.block(row, q, d, 1) += kK.eval(r[static_cast<std::size_t>(q)], u.norm()) * u / n;
      }
    }
  }
  for (Eigen::Index q = 0; q < p; ++q)
    for (Eigen::Index q2 = 0; q2 < p; ++q2) g(q, q2) = kK.eval(r[static_cast<std::size_t>(q)], r[static_cast<std::size_t>(q2)]);
  const double w = 1.0 / (obs.m * obs.l * n);
  const Eigen::VectorXd want = (w * a.transpose() * a + lambda * g).fullPivLu().solve(w * a.transpose() * v);

  const auto sol = krr_fit(obs, kK, lambda);
  Eigen::VectorXd got(p);
  Eigen::Index q = 0;
  for (std::size_t b = 0; b < obs.snapshots.size(); ++b)
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        const auto base = static_cast<Eigen::Index>(b) * n * n;
        got(q++) = sol.coefficients(base + i * n + k) + sol.coefficients(base + k * n + i);
      }
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST_CASE("perturbing the KRR coefficients never lowers the risk") {
  const auto obs = small_instance(4);
  const auto sol = krr_fit(obs, kK, 0.1);
  const double best = krr_objective(obs, sol, sol.coefficients);
  Rng rng = Rng::stream(4, "perturb");
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd delta(sol.coefficients.size());
    for (Eigen::Index j = 0; j < delta.size(); ++j) delta(j) = rng.normal();
    delta *= 1e-3 / delta.norm();
    CHECK(krr_objective(obs, sol, sol.coefficients + delta) >= best);
  }
}

TEST_CASE("GP posterior mean equals KRR under the scaled prior") {
  const auto grid = linspace(0.0, 3.0, 121);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto obs = seeded_instance(seed);
    CHECK(obs.n <= 5);
    CHECK(obs.m <= 3);
    CHECK(obs.l <= 3);
    for (double lambda : {1e-3, 1e-1, 10.0}) {
      const auto rep = check_gp_krr_equivalence(obs, kK, 0.1, lambda, grid);
      CHECK(rep.max_discrepancy <= rep.tolerance());
    }
  }
}

TEST_CASE("a prior missing the 1/(MNL) factor breaks the equivalence") {
  const auto obs = seeded_instance(1);
  const auto rep = check_gp_krr_equivalence(obs, kK, 0.1, 0.1, linspace(0.0, 3.0, 121),
                                            NonCollectiveForce::zero(), true);
  CHECK(rep.max_discrepancy > 1e-3);
}

TEST_CASE("two-agent coercivity ratio is exactly one quarter") {
  for (int d : {1, 2}) {
    ParticleSystemSpec spec;
    spec.d = d;
    spec.n = 2;
    spec.order = Order::First;
    spec.kernel = radial::cucker_smale(0.5);
    spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
    CoercivityOptions co;
    co.samples = 500;
    co.l = 2;
    co.t_end = 0.5;
    const auto rep = estimate_coercivity(spec, co, {{"zero", radial::constant(0.0)}});
    REQUIRE(rep.probes.size() == 7);
    for (const auto& p : rep.probes) CHECK(std::abs(p.ratio - 0.25) <= 3.0 * p.standard_error);
    REQUIRE(rep.skipped.size() == 1);
    CHECK(rep.skipped[0] == "zero");
  }
}

TEST_CASE("coercivity ratios respect the (N-1)/N upper bound") {
  CoercivityOptions co;
  co.samples = 400;
  co.l = 2;
  co.t_end = 0.5;
  const auto spec = convergence_system();
  const auto rep = estimate_coercivity(spec, co);
  CHECK(rep.upper_bound == doctest::Approx(0.8));
  for (const auto& p : rep.probes) {
    CHECK(p.ratio >= 0.0);
    CHECK(p.ratio <= rep.upper_bound + 3.0 * p.standard_error);
  }
  // Constant kernel on the line: the ratio is (N-1)/(2N) for every sample.
  CHECK(rep.probes[0].ratio == doctest::Approx(0.4).epsilon(1e-12));

  auto velocity = spec;
  velocity.order = Order::Second;
  velocity.interaction = InteractionVariable::VelocityDifference;
  CHECK_THROWS_AS(estimate_coercivity(velocity, co), InvalidInput);
}

TEST_CASE("convergence study edge cases") {
  ConvergenceOptions co;
  co.m_list = {};
  const auto empty = convergence_study(convergence_system(), convergence_kernel(), co);
  CHECK(empty.rows.empty());
  CHECK_FALSE(empty.slope.has_value());
  co.m_list = {8, 4};
  CHECK_THROWS_AS(convergence_study(convergence_system(), convergence_kernel(), co), InvalidInput);
}

TEST_CASE("noise-free data with vanishing regularization do at least as well as noisy data") {
  const auto spec = convergence_system();
  const auto rho = empirical_rho(spec, 300, 3, 1.0, 100, 0);
  KernelEstimate est;
  est.grid = linspace(0.0, rho.r_max(), 200);
  est.variance.assign(est.grid.size(), 0.0);
  const auto l2 = [&](double sigma) {
    const auto obs = generate_observations(spec, 16, 3, 1.0, sigma, 5);
    const auto sol = krr_fit(obs, convergence_kernel(), 1e-10);
    KernelEstimate e = est;
    for (double r : e.grid) e.mean.push_back(sol(r));
    return error_metrics(e, spec.kernel, rho).rel_l2_rho_tilde;
  };
  CHECK(l2(0.0) <= l2(0.1));
}
