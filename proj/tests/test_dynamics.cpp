#include <doctest.h>

#include <cmath>

#include "ipgp/dynamics.hpp"
#include "ipgp/errors.hpp"
#include "ipgp/integrator.hpp"
#include "ipgp/radial.hpp"

using namespace ipgp;

namespace {

ParticleSystemSpec two_agents(double c) {
  ParticleSystemSpec spec;
  spec.d = 1;
  spec.n = 2;
  spec.kernel = radial::constant(c);
  return spec;
}

State random_state(Rng& rng, int dim, bool with_v) {
  State s;
  s.x = Eigen::VectorXd::NullaryExpr(dim, [&] { return rng.uniform(-1.0, 1.0); });
  if (with_v) s.v = Eigen::VectorXd::NullaryExpr(dim, [&] { return rng.uniform(-1.0, 1.0); });
  return s;
}

}  // namespace

TEST_CASE("two agents with a constant kernel attract symmetrically") {
  auto spec = two_agents(2.0);
  State s;
  s.x = Eigen::Vector2d(0.0, 1.0);
  const Eigen::VectorXd f = rhs(spec, s);
  CHECK(f(0) == doctest::Approx(1.0));
  CHECK(f(1) == doctest::Approx(-1.0));
}

TEST_CASE("interaction forces sum to zero") {
  Rng rng(3);
  ParticleSystemSpec spec;
  spec.d = 2;
  spec.n = 7;
  spec.kernel = radial::truncate_c1(radial::morse(0.5, 0.5, 4.0, 4.0), 0.05);
  for (auto var : {InteractionVariable::PositionDifference, InteractionVariable::VelocityDifference}) {
    spec.order = Order::Second;
    spec.interaction = var;
    const State s = random_state(rng, 14, true);
    const Eigen::VectorXd f = interaction_force(spec, s);
    CHECK(std::abs(f(Eigen::seq(0, Eigen::last, 2)).sum()) < 1e-12);
    CHECK(std::abs(f(Eigen::seq(1, Eigen::last, 2)).sum()) < 1e-12);
  }
}

TEST_CASE("interaction term is invariant to translation and equivariant to permutation") {
  Rng rng(11);
  ParticleSystemSpec spec;
  spec.d = 2;
  spec.n = 5;
  spec.kernel = radial::cucker_smale(0.5);
  State s = random_state(rng, 10, false);
  const Eigen::VectorXd f = interaction_force(spec, s);
  State shifted = s;
  for (int i = 0; i < 5; ++i) shifted.x.segment(2 * i, 2) += Eigen::Vector2d(3.0, -1.5);
  CHECK((interaction_force(spec, shifted) - f).norm() < 1e-12);
  // swap agents 1 and 3
  State swapped = s;
  swapped.x.segment(2, 2) = s.x.segment(6, 2);
  swapped.x.segment(6, 2) = s.x.segment(2, 2);
  const Eigen::VectorXd g = interaction_force(spec, swapped);
  CHECK((g.segment(2, 2) - f.segment(6, 2)).norm() < 1e-12);
  CHECK((g.segment(0, 2) - f.segment(0, 2)).norm() < 1e-12);
}

TEST_CASE("non-finite kernel values are reported with the distance") {
  auto spec = two_agents(1.0);
  spec.kernel = [](double r) { return 1.0 / r; };
  State s;
  s.x = Eigen::Vector2d(0.5, 0.5);
  try {
    (void)rhs(spec, s);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.value() == 0.0);
  }
}

TEST_CASE("spec validation") {
  auto spec = two_agents(1.0);
  spec.n = 1;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec = two_agents(1.0);
  spec.interaction = InteractionVariable::VelocityDifference;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec = two_agents(1.0);
  spec.force = NonCollectiveForce::self_propulsion(1.0, 1.0);
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec = two_agents(1.0);
  spec.masses = {1.0, 0.0};
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec = two_agents(1.0);
  spec.force = NonCollectiveForce::stubborn({0.0}, 1.0, {2});
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  State bad;
  bad.x = Eigen::Vector3d::Zero();
  CHECK_THROWS_AS(rhs(two_agents(1.0), bad), InvalidInput);
}

TEST_CASE("force parameter jacobians match finite differences") {
  Rng rng(5);
  const State s = random_state(rng, 6, true);
  const NonCollectiveForce forces[] = {
      NonCollectiveForce::stubborn({0.3, -0.2}, 4.0, {0, 2}),
      NonCollectiveForce::self_propulsion(1.5, 0.5),
      NonCollectiveForce::rayleigh(0.8, 2.5),
  };
  for (const auto& f : forces) {
    const Eigen::MatrixXd jac = f.param_jacobian(s, 2);
    const Eigen::VectorXd p = f.pack();
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double h = 1e-6;
      Eigen::VectorXd pp = p, pm = p;
      pp(k) += h;
      pm(k) -= h;
      const Eigen::VectorXd fd = (f.unpack(pp).evaluate(s, 2) - f.unpack(pm).evaluate(s, 2)) / (2 * h);
      CHECK((fd - jac.col(k)).norm() < 1e-7);
    }
  }
}

TEST_CASE("force packing round-trips and checks length") {
  const auto f = NonCollectiveForce::stubborn({1.0, 0.0, -1.0}, 10.0, {0, 1, 2});
  CHECK(f.param_names() == std::vector<std::string>{"P1", "P2", "P3", "kappa"});
  CHECK(f.unpack(f.pack()).pack() == f.pack());
  CHECK_THROWS_AS(f.unpack(Eigen::VectorXd::Zero(2)), InvalidInput);
}

TEST_CASE("integrator reproduces exponential decay on the grid") {
  const auto grid = linspace(0.0, 3.0, 7);
  const auto ys = integrate_ode([](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -y; },
                                Eigen::VectorXd::Constant(1, 2.0), grid, {1e-10, 1e-12});
  REQUIRE(ys.size() == 7);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(ys[k](0) == doctest::Approx(2.0 * std::exp(-grid[k])).epsilon(1e-8));
}

TEST_CASE("two-agent consensus has the closed-form gap") {
  // gap' = -c * gap for N = 2 and a constant kernel c
  auto spec = two_agents(1.5);
  State s0;
  s0.x = Eigen::Vector2d(-0.4, 0.6);
  const auto grid = linspace(0.0, 2.0, 5);
  const auto traj = integrate(spec, s0, grid, {1e-10, 1e-12});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(traj[k].t == doctest::Approx(grid[k]));
    CHECK(traj[k].x(1) - traj[k].x(0) == doctest::Approx(std::exp(-1.5 * grid[k])).epsilon(1e-8));
    CHECK(traj[k].x.sum() == doctest::Approx(0.2));
  }
}

TEST_CASE("second-order integration conserves momentum without external force") {
  Rng rng(2);
  ParticleSystemSpec spec;
  spec.d = 2;
  spec.n = 4;
  spec.order = Order::Second;
  spec.kernel = radial::truncate_c1(radial::morse(0.5, 0.5, 4.0, 4.0), 0.05);
  const State s0 = random_state(rng, 8, true);
  const auto traj = integrate(spec, s0, linspace(0.0, 2.0, 3));
  const Eigen::Vector2d p0(s0.v(Eigen::seq(0, Eigen::last, 2)).sum(), s0.v(Eigen::seq(1, Eigen::last, 2)).sum());
  const State& last = traj.back();
  const Eigen::Vector2d p1(last.v(Eigen::seq(0, Eigen::last, 2)).sum(), last.v(Eigen::seq(1, Eigen::last, 2)).sum());
  CHECK((p1 - p0).norm() < 1e-9);
}

TEST_CASE("integration failure reports the last good time") {
  // y' = y^2 blows up at t = 1 for y(0) = 1; no grid point sits on the pole
  const std::vector<double> grid{0.0, 0.5, 1.7};
  try {
    (void)integrate_ode([](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return y.array().square(); },
                        Eigen::VectorXd::Ones(1), grid);
    FAIL("expected IntegrationFailure");
  } catch (const IntegrationFailure& e) {
    CHECK(e.last_good_time() == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("rng streams are reproducible and distinct") {
  auto a = Rng::stream(7, "data", 0), b = Rng::stream(7, "data", 0);
  auto c = Rng::stream(7, "data", 1), d = Rng::stream(7, "noise", 0);
  const double va = a.uniform();
  CHECK(va == b.uniform());
  CHECK(va != c.uniform());
  CHECK(va != d.uniform());
  Rng n(1);
  double sum = 0.0, sq = 0.0;
  const int count = 20000;
  for (int k = 0; k < count; ++k) {
    const double z = n.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / count) < 0.03);
  CHECK(std::abs(sq / count - 1.0) < 0.05);
}
