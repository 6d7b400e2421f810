#include "ipgp/radial.hpp"

#include <cmath>

#include "ipgp/errors.hpp"
#include "ipgp/kernels.hpp"

namespace ipgp::radial {

double opinion_piecewise(double r) {
  if (r < 0.4) return 2.5 * r;
  if (r < 0.6) return 1.0;
  if (r < 1.0) return 2.5 - 2.5 * r;
  return 0.0;
}

RadialFunction morse(double c_rep, double l_rep, double c_att, double l_att) {
  return [=](double r) {
    return (-(c_rep / l_rep) * std::exp(-r / l_rep) + (c_att / l_att) * std::exp(-r / l_att)) / r;
  };
}

RadialFunction truncate_c1(RadialFunction phi, double r0) {
  const double h = 1e-4 * r0;
  const double value = phi(r0);
  const double slope =
      (-phi(r0 + 2 * h) + 8 * phi(r0 + h) - 8 * phi(r0 - h) + phi(r0 - 2 * h)) / (12 * h);
  if (!(value != 0.0) || !std::isfinite(slope))
    throw InvalidInput("C1 truncation needs a finite nonzero value at r0");
  // a e^{-b r0} = value, -b a e^{-b r0} = slope
  const double b = -slope / value;
  const double a = value * std::exp(b * r0);
  return [phi = std::move(phi), r0, a, b](double r) {
    return r < r0 ? a * std::exp(-b * r) : phi(r);
  };
}

RadialFunction constant(double c) {
  return [c](double) { return c; };
}

RadialFunction cucker_smale(double beta) {
  return [beta](double r) { return std::pow(1.0 + r * r, -beta); };
}

RadialFunction matern_span(const std::vector<double>& centers,
                           const std::vector<double>& weights, double nu,
                           double s, double omega) {
  if (centers.size() != weights.size())
    throw InvalidInput("matern_span: centers and weights differ in length");
  const MaternKernel k(smoothness_from_value(nu), s, omega);
  return [k, centers, weights](double r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) acc += weights[j] * k.eval(centers[j], r);
    return acc;
  };
}

}  // namespace ipgp::radial
