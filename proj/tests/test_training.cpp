#include <doctest.h>

#include <cmath>

#include "ipgp/errors.hpp"
#include "ipgp/presets.hpp"
#include "ipgp/radial.hpp"
#include "ipgp/training.hpp"

using namespace ipgp;

namespace {

ParticleSystemSpec small_system() {
  ParticleSystemSpec spec;
  spec.d = 1;
  spec.n = 4;
  spec.order = Order::First;
  spec.force = NonCollectiveForce::stubborn({0.5}, 2.0, {0});
  spec.kernel = radial::cucker_smale(0.5);
  spec.mu0 = {-1.0, 1.0, 0.0, 0.0};
  return spec;
}

}  // namespace

TEST_CASE("line-search objective memoizes the last point") {
  const auto spec = small_system();
  const auto obs = generate_observations(spec, 2, 3, 1.0, 0.05, 4);
  LineSearchObjective f(std::make_shared<const GpObjective>(obs), skeleton_of(spec, Smoothness::ThreeHalves));
  const GpParams p{spec.force, MaternKernel(Smoothness::ThreeHalves, 1.0, 0.5), 0.1};
  const Eigen::VectorXd x = f.pack(p);
  CHECK(x.size() == f.size());
  Eigen::VectorXd g1, g2;
  const double v1 = f(x, g1);
  const double v2 = f(x, g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
  CHECK(f.computations() == 1);
  const GpParams back = f.unpack(x);
  CHECK(back.sigma == doctest::Approx(0.1));
  CHECK(back.kernel.omega() == doctest::Approx(0.5));
}

TEST_CASE("failed likelihood evaluations become +inf with a zero gradient") {
  const auto spec = small_system();
  const auto obs = generate_observations(spec, 1, 2, 1.0, 0.05, 4);
  LineSearchObjective f(std::make_shared<const GpObjective>(obs), skeleton_of(spec, Smoothness::ThreeHalves));
  Eigen::VectorXd x = f.pack({spec.force, MaternKernel(Smoothness::ThreeHalves, 1.0, 0.5), 0.1});
  x(x.size() - 3) = 1000.0;  // log s: the amplitude overflows
  Eigen::VectorXd g;
  CHECK(std::isinf(f(x, g)));
  CHECK(g.size() == x.size());
  CHECK(g.isZero());
  CHECK(f.failures() == 1);
}

TEST_CASE("fit is deterministic and its model round-trips through JSON") {
  const auto spec = small_system();
  const auto obs = generate_observations(spec, 2, 3, 1.0, 0.05, 9);
  FitConfig cfg;
  cfg.max_evaluations = 40;
  const auto sk = skeleton_of(spec, Smoothness::ThreeHalves);
  const auto a = fit(obs, sk, cfg);
  const auto b = fit(obs, sk, cfg);
  const std::string ja = model_to_json(a);
  CHECK(ja == model_to_json(b));
  CHECK(a.evaluations <= 40);
  CHECK(a.converged + a.budget_exhausted + a.stalled >= 1);

  const auto back = model_from_json(ja, obs);
  CHECK(back.force.pack() == a.force.pack());
  CHECK(back.kernel.s() == a.kernel.s());
  CHECK(back.kernel.omega() == a.kernel.omega());
  CHECK(back.sigma == a.sigma);
  CHECK(back.cache->posterior_mean(0.4) == doctest::Approx(a.cache->posterior_mean(0.4)).epsilon(1e-12));
  CHECK(model_to_json(back) == ja);

  auto other = obs;
  other.snapshots[1].target(0) += 1e-6;
  CHECK_THROWS_AS(model_from_json(ja, other), ContractError);
  CHECK_THROWS_AS(model_from_json(ja.substr(0, ja.size() / 2), obs), ParseError);
}

TEST_CASE("zero budget reports the initial point") {
  const auto spec = small_system();
  const auto obs = generate_observations(spec, 1, 3, 1.0, 0.05, 2);
  FitConfig cfg;
  cfg.max_evaluations = 0;
  cfg.alpha0 = Eigen::Vector2d(0.3, 1.5);
  cfg.s0 = 2.0;
  cfg.omega0 = 0.7;
  cfg.sigma0 = 0.2;
  const auto m = fit(obs, skeleton_of(spec, Smoothness::ThreeHalves), cfg);
  CHECK(m.force.pack()(0) == doctest::Approx(0.3));
  CHECK(m.force.pack()(1) == doctest::Approx(1.5));
  CHECK(m.kernel.s() == doctest::Approx(2.0));
  CHECK(m.kernel.omega() == doctest::Approx(0.7));
  CHECK(m.sigma == doctest::Approx(0.2));
  CHECK(m.budget_exhausted);
  CHECK(std::isfinite(m.nll));
}

TEST_CASE("fit rejects data that do not match the skeleton") {
  const auto spec = small_system();
  const auto obs = generate_observations(spec, 1, 2, 1.0, 0.05, 2);
  auto sk = skeleton_of(spec, Smoothness::ThreeHalves);
  sk.n = 5;
  CHECK_THROWS_AS(fit(obs, sk, FitConfig{}), InvalidInput);
}

TEST_CASE("presets expand to the tabulated systems") {
  const auto od = preset("od");
  CHECK(od.spec.n == 10);
  CHECK(od.spec.d == 1);
  CHECK(od.m == 6);
  CHECK(od.l == 4);
  CHECK(od.t_end == 15.0);
  CHECK(od.t_future == 20.0);
  CHECK(od.sigma == 0.05);
  CHECK(od.spec.force.pack() == Eigen::Vector4d(1.0, 0.0, -1.0, 10.0));
  const auto fm = preset("dorsogma");
  CHECK(fm.spec.order == Order::Second);
  CHECK(fm.spec.d == 2);
  CHECK(fm.spec.force.pack() == Eigen::Vector2d(1.5, 0.5));
  CHECK(fm.m == 3);
  CHECK(fm.l == 3);
  CHECK(fm.sigma == 0.1);
  CHECK(fm.spec.mu0.position_lo == -0.5);
  CHECK(fm.spec.mu0.position_hi == 0.5);
  const auto cs = preset("cucker-smale");
  CHECK(cs.spec.interaction == InteractionVariable::VelocityDifference);
  CHECK(cs.fit.max_evaluations == 100);
  CHECK_THROWS_WITH_AS(preset("fish"), doctest::Contains("od, dorsogma, cucker-smale"), InvalidInput);
}
