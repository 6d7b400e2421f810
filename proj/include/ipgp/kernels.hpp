#pragma once

#include <string>

namespace ipgp {

/// Half-integer Matern smoothness; these are the orders with elementary
/// closed forms.
enum class Smoothness { Half, ThreeHalves, FiveHalves };

Smoothness smoothness_from_value(double nu);
double smoothness_value(Smoothness nu);

/// Stationary Matern covariance on distances,
///   K(r, r') = s^2 * 2^{1-nu}/Gamma(nu) * (sqrt(2 nu)|r - r'|/omega)^nu
///              * B_nu(sqrt(2 nu)|r - r'|/omega),
/// evaluated through the half-integer closed forms.
///
/// Amplitude and length-scale are trained in log space; both partial
/// derivatives are returned in that parameterization.  An amplitude of 0
/// is accepted and gives the degenerate zero prior.
class MaternKernel {
 public:
  MaternKernel(Smoothness nu, double s, double omega);
  static MaternKernel from_log(Smoothness nu, double log_s, double log_omega);

  double eval(double r, double r_prime) const { return eval_lag(lag(r, r_prime)); }
  /// K as a function of u = |r - r'|.
  double eval_lag(double u) const;

  struct HyperGradient {
    double d_log_s;
    double d_log_omega;
  };
  HyperGradient grad_hyper(double r, double r_prime) const;

  /// Value and d/dlog(omega) at lag u, sharing the exponential.
  void eval_with_dlog_omega(double u, double& value, double& d_log_omega) const;

  Smoothness nu() const { return nu_; }
  double s() const { return s_; }
  double omega() const { return omega_; }
  double variance() const { return s_ * s_; }

  MaternKernel with_amplitude(double s) const { return {nu_, s, omega_}; }

 private:
  static double lag(double r, double r_prime) {
    return r > r_prime ? r - r_prime : r_prime - r;
  }

  Smoothness nu_;
  double s_;
  double omega_;
};

}  // namespace ipgp
