#pragma once

#include <vector>

#include "ipgp/dynamics.hpp"

// Ground-truth interaction kernels used to synthesize data.
namespace ipgp::radial {

/// Piecewise-linear opinion kernel: 2.5r on [0,0.4), 1 on [0.4,0.6),
/// 2.5 - 2.5r on [0.6,1), 0 beyond.
double opinion_piecewise(double r);

/// Morse-type kernel (1/r)(-(c_rep/l_rep) e^{-r/l_rep} + (c_att/l_att) e^{-r/l_att}).
RadialFunction morse(double c_rep, double l_rep, double c_att, double l_att);

/// Replaces phi on [0, r0) by a e^{-b r}, with a and b chosen so the result
/// is C1 at r0. The derivative at r0 is taken by a five-point stencil.
RadialFunction truncate_c1(RadialFunction phi, double r0);

RadialFunction constant(double c);

/// (1 + r^2)^(-beta)
RadialFunction cucker_smale(double beta);

/// sum_j w_j K(c_j, r) for a Matern kernel; an element of that kernel's RKHS.
RadialFunction matern_span(const std::vector<double>& centers,
                           const std::vector<double>& weights, double nu,
                           double s, double omega);

}  // namespace ipgp::radial
