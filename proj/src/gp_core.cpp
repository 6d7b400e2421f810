#include "ipgp/gp_core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ipgp/errors.hpp"
#include "ipgp/hash.hpp"

namespace ipgp {

namespace {

Eigen::Index snapshot_count(const ObservationSet& obs) {
  return static_cast<Eigen::Index>(obs.m) * obs.l;
}

void check_row_cap(const ObservationSet& obs, Eigen::Index row_cap) {
  if (row_cap > 0 && obs.rows() > row_cap) {
    std::ostringstream msg;
    msg << "d*N*M*L = " << obs.rows() << " exceeds the dense covariance cap of " << row_cap;
    throw ResourceError(msg.str());
  }
}

}  // namespace

PairBasis::PairBasis(const ObservationSet& obs, Eigen::Index row_cap) : n_(obs.n) {
  obs.validate();
  check_row_cap(obs, row_cap);
  const int d = obs.d, n = obs.n;
  const Eigen::Index per_snap = static_cast<Eigen::Index>(n) * (n - 1) / 2;
  const Eigen::Index snaps = snapshot_count(obs);
  const bool by_velocity = obs.interaction == InteractionVariable::VelocityDifference;

  distances_.reserve(static_cast<std::size_t>(per_snap * snaps));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(per_snap * snaps * 2 * d));
  Eigen::Index col = 0;
  for (Eigen::Index b = 0; b < snaps; ++b) {
    const State& s = obs.snapshots[static_cast<std::size_t>(b)].state;
    const Eigen::Index row0 = b * d * n;
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k, ++col) {
        distances_.push_back((s.x.segment(k * d, d) - s.x.segment(i * d, d)).norm());
        for (int c = 0; c < d; ++c) {
          const double u = by_velocity ? s.v(k * d + c) - s.v(i * d + c)
                                       : s.x(k * d + c) - s.x(i * d + c);
          trips.emplace_back(row0 + i * d + c, col, u);
          trips.emplace_back(row0 + k * d + c, col, -u);
        }
      }
    }
  }
  directions_.resize(obs.rows(), col);
  directions_.setFromTriplets(trips.begin(), trips.end());
}

Eigen::MatrixXd PairBasis::gram(const MaternKernel& kernel) const {
  const Eigen::Index p = pairs();
  Eigen::MatrixXd g(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    g(j, j) = kernel.eval_lag(0.0);
    for (Eigen::Index i = j + 1; i < p; ++i)
      g(i, j) = g(j, i) = kernel.eval(distances_[static_cast<std::size_t>(i)],
                                      distances_[static_cast<std::size_t>(j)]);
  }
  return g;
}

void PairBasis::gram_with_dlog_omega(const MaternKernel& kernel, Eigen::MatrixXd& g,
                                     Eigen::MatrixXd& dg) const {
  const Eigen::Index p = pairs();
  g.resize(p, p);
  dg.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    kernel.eval_with_dlog_omega(0.0, g(j, j), dg(j, j));
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double v, dv;
      kernel.eval_with_dlog_omega(
          std::abs(distances_[static_cast<std::size_t>(i)] - distances_[static_cast<std::size_t>(j)]),
          v, dv);
      g(i, j) = g(j, i) = v;
      dg(i, j) = dg(j, i) = dv;
    }
  }
}

Eigen::VectorXd PairBasis::cross_gram(const MaternKernel& kernel, double r_star) const {
  Eigen::VectorXd out(pairs());
  for (Eigen::Index p = 0; p < pairs(); ++p)
    out(p) = kernel.eval(distances_[static_cast<std::size_t>(p)], r_star);
  return out;
}

Eigen::MatrixXd PairBasis::covariance(const Eigen::MatrixXd& gram) const {
  const Eigen::MatrixXd grt = gram * directions_.transpose();
  Eigen::MatrixXd k = directions_ * grt;
  k /= static_cast<double>(n_) * n_;
  // Symmetrize away round-off so Cholesky sees an exactly symmetric matrix.
  return 0.5 * (k + k.transpose());
}

Eigen::MatrixXd assemble_ff_cov(const ObservationSet& obs, const MaternKernel& kernel,
                                Eigen::Index row_cap) {
  PairBasis basis(obs, row_cap);
  return basis.covariance(basis.gram(kernel));
}

Eigen::VectorXd assemble_cross_cov(const ObservationSet& obs, const MaternKernel& kernel,
                                   double r_star) {
  PairBasis basis(obs, 0);
  return basis.directions() * basis.cross_gram(kernel, r_star) / static_cast<double>(obs.n);
}

Eigen::VectorXd stacked_targets(const ObservationSet& obs) {
  const Eigen::Index block = static_cast<Eigen::Index>(obs.d) * obs.n;
  Eigen::VectorXd z(obs.rows());
  for (Eigen::Index b = 0; b < snapshot_count(obs); ++b) {
    z.segment(b * block, block) = obs.snapshots[static_cast<std::size_t>(b)].target;
    if (obs.order == Order::Second)
      for (int i = 0; i < obs.n; ++i) z.segment(b * block + i * obs.d, obs.d) *= obs.mass(i);
  }
  return z;
}

Eigen::VectorXd stacked_force(const ObservationSet& obs, const NonCollectiveForce& force) {
  const Eigen::Index block = static_cast<Eigen::Index>(obs.d) * obs.n;
  Eigen::VectorXd f(obs.rows());
  for (Eigen::Index b = 0; b < snapshot_count(obs); ++b)
    f.segment(b * block, block) = force.evaluate(obs.snapshots[static_cast<std::size_t>(b)].state, obs.d);
  return f;
}

Eigen::MatrixXd stacked_force_jacobian(const ObservationSet& obs, const NonCollectiveForce& force) {
  const Eigen::Index block = static_cast<Eigen::Index>(obs.d) * obs.n;
  const Eigen::Index np = static_cast<Eigen::Index>(force.param_count());
  Eigen::MatrixXd j(obs.rows(), np);
  for (Eigen::Index b = 0; b < snapshot_count(obs); ++b)
    j.middleRows(b * block, block) =
        force.param_jacobian(obs.snapshots[static_cast<std::size_t>(b)].state, obs.d);
  return j;
}

const std::vector<double>& jitter_ladder() {
  static const std::vector<double> ladder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  return ladder;
}

Eigen::LLT<Eigen::MatrixXd> factorize_with_jitter(const Eigen::MatrixXd& c, double& jitter) {
  if (!c.allFinite()) throw NumericError("covariance matrix has non-finite entries");
  const Eigen::Index n = c.rows();
  for (double j : jitter_ladder()) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (j == 0.0) {
      llt.compute(c);
    } else {
      Eigen::MatrixXd cj = c;
      cj.diagonal().array() += j;
      llt.compute(cj);
    }
    if (llt.info() == Eigen::Success) {
      // LLT only inspects pivots; a NaN-free positive diagonal confirms success.
      const auto diag = llt.matrixLLT().diagonal();
      if (diag.allFinite() && (diag.array() > 0.0).all()) {
        jitter = j;
        return llt;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  const double lambda_min = n > 0 ? eig.eigenvalues()(0) : 0.0;
  std::ostringstream msg;
  msg << "covariance is not positive definite even with jitter " << jitter_ladder().back()
      << " (smallest eigenvalue " << lambda_min << ")";
  throw NumericError(msg.str(), lambda_min);
}

namespace {

void check_params(const GpParams& params) {
  if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma))
    throw InvalidInput("noise level sigma must be finite and >= 0");
  if (!params.force.pack().allFinite())
    throw InvalidInput("force parameters must be finite");
}

struct Factorized {
  Eigen::MatrixXd k;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd residual;
  Eigen::VectorXd gamma;
  double jitter = 0.0;
};

Factorized factorize(const ObservationSet& obs, const PairBasis& basis, const Eigen::VectorXd& z,
                     const GpParams& params, const Eigen::MatrixXd& gram) {
  Factorized f;
  f.k = basis.covariance(gram);
  Eigen::MatrixXd c = f.k;
  c.diagonal().array() += params.sigma * params.sigma;
  f.llt = factorize_with_jitter(c, f.jitter);
  f.residual = z - stacked_force(obs, params.force);
  f.gamma = f.llt.solve(f.residual);
  return f;
}

double nll_value(const Factorized& f) {
  const double n = static_cast<double>(f.residual.size());
  const double log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * f.residual.dot(f.gamma) + 0.5 * log_det +
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

GpObjective::GpObjective(const ObservationSet& obs, Eigen::Index row_cap)
    : obs_(std::make_shared<const ObservationSet>(obs)),
      basis_(std::make_shared<const PairBasis>(obs, row_cap)),
      targets_(stacked_targets(obs)) {}

double GpObjective::nll(const GpParams& params) const {
  check_params(params);
  const Factorized f = factorize(*obs_, *basis_, targets_, params, basis_->gram(params.kernel));
  return nll_value(f);
}

NllGradient GpObjective::nll_grad(const GpParams& params) const {
  check_params(params);
  Eigen::MatrixXd g, dg;
  basis_->gram_with_dlog_omega(params.kernel, g, dg);
  const Factorized f = factorize(*obs_, *basis_, targets_, params, g);

  const Eigen::Index na = static_cast<Eigen::Index>(params.force.param_count());
  const Eigen::Index n = f.residual.size();
  NllGradient out;
  out.value = nll_value(f);
  out.gradient.resize(na + 3);

  // W = gamma gamma^T - C^{-1}; dNLL/dtheta = -1/2 tr(W dC/dtheta).
  Eigen::MatrixXd w = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w = f.gamma * f.gamma.transpose() - w;

  if (na > 0) out.gradient.head(na) = -stacked_force_jacobian(*obs_, params.force).transpose() * f.gamma;
  out.gradient(na) = -(w.cwiseProduct(f.k)).sum();  // dK/dlog s = 2K
  const auto& r = basis_->directions();
  const Eigen::MatrixXd wr = w * r;
  const Eigen::MatrixXd q = r.transpose() * wr;
  const double nn = static_cast<double>(obs_->n) * obs_->n;
  out.gradient(na + 1) = -0.5 * q.cwiseProduct(dg).sum() / nn;
  out.gradient(na + 2) = -params.sigma * params.sigma * w.trace();
  return out;
}

double nll(const ObservationSet& obs, const GpParams& params) {
  return GpObjective(obs).nll(params);
}

NllGradient nll_grad(const ObservationSet& obs, const GpParams& params) {
  return GpObjective(obs).nll_grad(params);
}

std::string cache_fingerprint(const ObservationSet& obs, const MaternKernel& kernel) {
  Fnv1a h;
  h.update(std::string_view(obs.hash()));
  h.update(smoothness_value(kernel.nu()));
  h.update(kernel.s());
  h.update(kernel.omega());
  return h.hex();
}

CovarianceCache CovarianceCache::build(const ObservationSet& obs, const GpParams& params,
                                       Eigen::Index row_cap) {
  check_params(params);
  auto basis = std::make_shared<const PairBasis>(obs, row_cap);
  CovarianceCache cache(basis, params.kernel);
  Factorized f = factorize(obs, *basis, stacked_targets(obs), params, basis->gram(params.kernel));
  cache.sigma_ = params.sigma;
  cache.jitter_ = f.jitter;
  cache.k_ff_ = std::move(f.k);
  cache.llt_ = std::move(f.llt);
  cache.residual_ = std::move(f.residual);
  cache.alpha_vec_ = std::move(f.gamma);
  cache.coefficients_ = basis->directions().transpose() * cache.alpha_vec_ / static_cast<double>(obs.n);
  cache.fingerprint_ = cache_fingerprint(obs, params.kernel);
  return cache;
}

double CovarianceCache::posterior_mean(double r_star) const {
  return basis_->cross_gram(kernel_, r_star).dot(coefficients_);
}

PosteriorPoint CovarianceCache::posterior(double r_star) const {
  const Eigen::VectorXd g = basis_->cross_gram(kernel_, r_star);
  const Eigen::VectorXd k_star = basis_->directions() * g / static_cast<double>(basis_->agents());
  const Eigen::VectorXd v = llt_.matrixL().solve(k_star);
  return {g.dot(coefficients_), kernel_.eval_lag(0.0) - v.squaredNorm()};
}

PosteriorPoint posterior_phi(const CovarianceCache& cache, const ObservationSet& obs,
                             const MaternKernel& kernel, double r_star) {
  if (cache_fingerprint(obs, kernel) != cache.fingerprint())
    throw ContractError("covariance cache was built for different observations or kernel");
  if (!(r_star >= 0.0) || !std::isfinite(r_star))
    throw InvalidInput("query distance must be finite and >= 0");
  return cache.posterior(r_star);
}

}  // namespace ipgp
