#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ipgp/errors.hpp"
#include "ipgp/observations.hpp"
#include "ipgp/preprocess.hpp"
#include "ipgp/radial.hpp"

using namespace ipgp;

namespace {

ParticleSystemSpec small_second_order() {
  ParticleSystemSpec spec;
  spec.d = 2;
  spec.n = 3;
  spec.order = Order::Second;
  spec.force = NonCollectiveForce::self_propulsion(1.0, 0.5);
  spec.kernel = radial::cucker_smale(0.5);
  spec.mu0 = {-0.5, 0.5, -0.2, 0.2};
  return spec;
}

}  // namespace

TEST_CASE("noise-free targets equal the right-hand side at the stored states") {
  const auto spec = small_second_order();
  const auto obs = generate_observations(spec, 2, 4, 1.0, 0.0, 9);
  CHECK(obs.rows() == 2 * 3 * 2 * 4);
  for (const auto& snap : obs.snapshots)
    CHECK((snap.target - rhs(spec, snap.state)).norm() < 1e-12);
  CHECK(obs.at(1, 3).state.t == doctest::Approx(1.0));
}

TEST_CASE("target noise has the requested scale and leaves states untouched") {
  ParticleSystemSpec spec;
  spec.d = 1;
  spec.n = 10;
  spec.kernel = radial::opinion_piecewise;
  spec.mu0 = {-1.0, 1.0};
  const auto clean = generate_observations(spec, 20, 5, 2.0, 0.0, 4);
  const auto noisy = generate_observations(spec, 20, 5, 2.0, 0.1, 4);
  double sq = 0.0;
  for (std::size_t k = 0; k < clean.snapshots.size(); ++k) {
    CHECK(clean.snapshots[k].state.x == noisy.snapshots[k].state.x);
    sq += (noisy.snapshots[k].target - clean.snapshots[k].target).squaredNorm();
  }
  CHECK(std::sqrt(sq / static_cast<double>(clean.rows())) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("generation is deterministic in the seed") {
  const auto spec = small_second_order();
  CHECK(generate_observations(spec, 2, 3, 1.0, 0.1, 5).hash() ==
        generate_observations(spec, 2, 3, 1.0, 0.1, 5).hash());
  CHECK(generate_observations(spec, 2, 3, 1.0, 0.1, 5).hash() !=
        generate_observations(spec, 2, 3, 1.0, 0.1, 6).hash());
}

TEST_CASE("json round trip is exact and hash-checked") {
  const auto obs = generate_observations(small_second_order(), 2, 3, 1.0, 0.1, 1);
  const std::string text = observations_to_json(obs);
  const auto back = observations_from_json(text);
  CHECK(back.hash() == obs.hash());
  CHECK(back.sigma_true == obs.sigma_true);

  std::string tampered = text;
  const auto pos = tampered.find("\"targets\"");
  REQUIRE(pos != std::string::npos);
  const auto digit = tampered.find_first_of("123456789", pos);
  tampered[digit] = tampered[digit] == '9' ? '8' : static_cast<char>(tampered[digit] + 1);
  CHECK_THROWS_AS(observations_from_json(tampered), ContractError);

  try {
    (void)observations_from_json(text.substr(0, 40));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
  }
}

TEST_CASE("csv round trip is exact") {
  const auto obs = generate_observations(small_second_order(), 2, 3, 1.0, 0.1, 1);
  std::stringstream buf;
  write_observations_csv(buf, obs);
  ObservationSet skeleton = obs;
  skeleton.snapshots.clear();
  skeleton.times.clear();
  skeleton.m = skeleton.l = 0;
  const auto back = read_observations_csv(buf, skeleton);
  CHECK(back.m == 2);
  CHECK(back.l == 3);
  CHECK(back.hash() == obs.hash());

  std::stringstream bad("m,l,t\n");
  CHECK_THROWS_AS(read_observations_csv(bad, skeleton), ParseError);
}

TEST_CASE("preprocessing recovers derivatives of quadratic paths") {
  // x(t) = a t^2 + b t per coordinate: moving averages shift the value but
  // central differences of the smoothed path stay exact.
  const int frames_count = 20, n = 3;
  Frames frames;
  auto path = [](int agent, int coord, double t) {
    const double a = 0.01 * (agent + 1) * (coord == 0 ? 1.0 : -1.0);
    const double b = 0.1 * agent - 0.05 * coord;
    return a * t * t + b * t;
  };
  for (int f = 0; f < frames_count; ++f) {
    Eigen::MatrixXd frame(n, 2);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) frame(i, c) = path(i, c, 0.5 * f);
    frames.push_back(frame);
  }
  PreprocessOptions opt;
  opt.window = 3;
  opt.dt = 0.5;
  opt.normalize = false;
  const auto obs = preprocess_real_data(frames, opt);
  CHECK(obs.order == Order::Second);
  CHECK(obs.m == 1);
  CHECK(obs.l == frames_count - 3 + 1 - 2);
  for (int j = 0; j < obs.l; ++j) {
    const auto& s = obs.at(0, j);
    const double t = s.state.t;
    CHECK(t == doctest::Approx(0.5 * (j + 1 + 1)));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        const double a = 0.01 * (i + 1) * (c == 0 ? 1.0 : -1.0);
        const double b = 0.1 * i - 0.05 * c;
        CHECK(s.state.v(i * 2 + c) == doctest::Approx(2 * a * t + b).epsilon(1e-10));
        CHECK(s.target(i * 2 + c) == doctest::Approx(2 * a).epsilon(1e-8));
      }
  }
}

TEST_CASE("preprocessing rejects ragged frames") {
  Frames frames(15, Eigen::MatrixXd::Zero(4, 2));
  frames[7] = Eigen::MatrixXd::Zero(3, 2);
  try {
    (void)preprocess_real_data(frames, {});
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(e.frame() == 7);
  }
  std::stringstream csv("frame,agent,x,y\n0,0,1,2\n0,1,1,2\n1,0,3,4\n");
  CHECK_THROWS_AS(read_frames_csv(csv), IngestionError);
}
