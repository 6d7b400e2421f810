#include "ipgp/kernels.hpp"

#include <cmath>

#include "ipgp/errors.hpp"

namespace ipgp {

namespace {
constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;
}  // namespace

Smoothness smoothness_from_value(double nu) {
  if (nu == 0.5) return Smoothness::Half;
  if (nu == 1.5) return Smoothness::ThreeHalves;
  if (nu == 2.5) return Smoothness::FiveHalves;
  throw InvalidInput("Matern smoothness must be one of 0.5, 1.5, 2.5");
}

double smoothness_value(Smoothness nu) {
  switch (nu) {
    case Smoothness::Half: return 0.5;
    case Smoothness::ThreeHalves: return 1.5;
    case Smoothness::FiveHalves: return 2.5;
  }
  return 1.5;
}

MaternKernel::MaternKernel(Smoothness nu, double s, double omega)
    : nu_(nu), s_(s), omega_(omega) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("Matern amplitude must be finite and >= 0");
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw InvalidInput("Matern length-scale must be finite and > 0");
}

MaternKernel MaternKernel::from_log(Smoothness nu, double log_s, double log_omega) {
  return {nu, std::exp(log_s), std::exp(log_omega)};
}

double MaternKernel::eval_lag(double u) const {
  const double rho = u / omega_;
  const double s2 = s_ * s_;
  switch (nu_) {
    case Smoothness::Half:
      return s2 * std::exp(-rho);
    case Smoothness::ThreeHalves: {
      const double a = kSqrt3 * rho;
      return s2 * (1.0 + a) * std::exp(-a);
    }
    case Smoothness::FiveHalves: {
      const double a = kSqrt5 * rho;
      return s2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

void MaternKernel::eval_with_dlog_omega(double u, double& value, double& d_log_omega) const {
  // d/dlog(omega) = -rho dK/drho
  const double rho = u / omega_;
  const double s2 = s_ * s_;
  switch (nu_) {
    case Smoothness::Half: {
      const double e = s2 * std::exp(-rho);
      value = e;
      d_log_omega = rho * e;
      return;
    }
    case Smoothness::ThreeHalves: {
      const double a = kSqrt3 * rho;
      const double e = s2 * std::exp(-a);
      value = (1.0 + a) * e;
      d_log_omega = a * a * e;  // 3 rho^2 s^2 e^{-sqrt3 rho}
      return;
    }
    case Smoothness::FiveHalves: {
      const double a = kSqrt5 * rho;
      const double e = s2 * std::exp(-a);
      value = (1.0 + a + a * a / 3.0) * e;
      d_log_omega = a * a * (1.0 + a) / 3.0 * e;  // (5/3) rho^2 (1 + sqrt5 rho)
      return;
    }
  }
}

MaternKernel::HyperGradient MaternKernel::grad_hyper(double r, double r_prime) const {
  double value = 0.0, d_omega = 0.0;
  eval_with_dlog_omega(lag(r, r_prime), value, d_omega);
  return {2.0 * value, d_omega};
}

}  // namespace ipgp
