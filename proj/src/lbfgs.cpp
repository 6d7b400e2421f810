#include "ipgp/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "ipgp/errors.hpp"

namespace ipgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
  double a = 0.0;
  double f = kInf;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd g;
};

/// Minimizer of the cubic through (a, fa, da) and (b, fb, db), or NaN.
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

class Evaluator {
 public:
  Evaluator(const GradientObjective& f, int budget) : f_(f), budget_(budget) {}

  bool exhausted() const { return count_ >= budget_; }
  int count() const { return count_; }

  /// Returns false without calling f once the budget is spent.
  bool operator()(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) {
    if (exhausted()) return false;
    ++count_;
    grad.resize(x.size());
    value = f_(x, grad);
    if (!std::isfinite(value) || !grad.allFinite()) {
      value = kInf;
      grad.setZero();
    }
    return true;
  }

 private:
  const GradientObjective& f_;
  int budget_;
  int count_ = 0;
};

enum class SearchStatus { Wolfe, Decrease, Failed };

struct SearchResult {
  SearchStatus status = SearchStatus::Failed;
  Point point;
};

class LineSearch {
 public:
  LineSearch(Evaluator& eval, const Eigen::VectorXd& x, const Eigen::VectorXd& p, double f0,
             double d0, const LbfgsOptions& opt)
      : eval_(eval), x_(x), p_(p), f0_(f0), d0_(d0), opt_(opt) {}

  SearchResult run(double a_init) {
    Point prev{0.0, f0_, d0_, {}};
    double a = a_init;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      Point cur;
      if (!probe(a, cur)) return best_decrease();
      if (cur.f > f0_ + opt_.c1 * a * d0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.d) <= -opt_.c2 * d0_) return {SearchStatus::Wolfe, cur};
      if (cur.d >= 0.0) return zoom(cur, prev);
      prev = cur;
      a *= 2.0;
    }
    return best_decrease();
  }

 private:
  bool probe(double a, Point& out) {
    out.a = a;
    if (!eval_(x_ + a * p_, out.f, out.g)) return false;
    out.d = out.g.dot(p_);
    if (std::isfinite(out.f) && out.f <= f0_ + opt_.c1 * a * d0_ && out.f < best_.f) best_ = out;
    return true;
  }

  SearchResult best_decrease() const {
    if (best_.a > 0.0) return {SearchStatus::Decrease, best_};
    return {};
  }

  SearchResult zoom(Point lo, Point hi) {
    for (int j = 0; j < opt_.max_line_search; ++j) {
      const double width = hi.a - lo.a;
      if (std::abs(width) <= 1e-14 * std::max(1.0, std::abs(lo.a))) break;
      double a = std::numeric_limits<double>::quiet_NaN();
      if (std::isfinite(hi.f) && std::isfinite(lo.f))
        a = cubic_min(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d);
      const double left = std::min(lo.a, hi.a) + 0.1 * std::abs(width);
      const double right = std::max(lo.a, hi.a) - 0.1 * std::abs(width);
      if (!(a >= left && a <= right)) a = 0.5 * (lo.a + hi.a);

      Point cur;
      if (!probe(a, cur)) break;
      if (cur.f > f0_ + opt_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.d) <= -opt_.c2 * d0_) return {SearchStatus::Wolfe, cur};
        if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return best_decrease();
  }

  Evaluator& eval_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& p_;
  double f0_, d0_;
  const LbfgsOptions& opt_;
  Point best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const GradientObjective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opt) {
  if (opt.max_evaluations < 0) throw InvalidInput("evaluation budget must be >= 0");
  if (!(opt.gradient_tolerance > 0.0)) throw InvalidInput("gradient tolerance must be > 0");
  if (opt.memory < 1) throw InvalidInput("L-BFGS memory must be >= 1");

  LbfgsResult res;
  res.x = x0;
  res.value = kInf;
  res.gradient = Eigen::VectorXd::Zero(x0.size());
  Evaluator eval(f, opt.max_evaluations);
  if (!eval(res.x, res.value, res.gradient)) {
    res.budget_exhausted = true;
    res.message = "evaluation budget is zero";
    return res;
  }
  res.trace.push_back({0, 1, res.value, res.gradient.lpNorm<Eigen::Infinity>()});
  if (!std::isfinite(res.value)) {
    res.evaluations = eval.count();
    res.stalled = true;
    res.message = "objective is not finite at the initial point";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  bool fresh = true;  // no curvature pairs yet: scale the first step

  while (true) {
    const double gnorm = res.gradient.lpNorm<Eigen::Infinity>();
    if (gnorm <= opt.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    if (eval.exhausted()) {
      res.budget_exhausted = true;
      res.message = "evaluation budget exhausted";
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = res.gradient;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd p = -q;
    double d0 = res.gradient.dot(p);
    if (!(d0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -res.gradient;
      d0 = -res.gradient.squaredNorm();
      fresh = true;
    }

    const double a_init = fresh ? std::min(1.0, 1.0 / std::sqrt(-d0)) : 1.0;
    LineSearch ls(eval, res.x, p, res.value, d0, opt);
    SearchResult sr = ls.run(a_init);
    if (sr.status == SearchStatus::Failed) {
      if (!s_hist.empty() && !eval.exhausted()) {
        // Discard curvature information and retry along steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        fresh = true;
        continue;
      }
      if (eval.exhausted()) {
        res.budget_exhausted = true;
        res.message = "evaluation budget exhausted";
      } else {
        res.stalled = true;
        res.message = "line search made no progress";
      }
      break;
    }

    const Eigen::VectorXd s = sr.point.a * p;
    const Eigen::VectorXd y = sr.point.g - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      fresh = false;
    }
    res.x += s;
    res.value = sr.point.f;
    res.gradient = sr.point.g;
    ++res.iterations;
    res.trace.push_back({res.iterations, eval.count(), res.value,
                         res.gradient.lpNorm<Eigen::Infinity>()});
  }
  res.evaluations = eval.count();
  return res;
}

}  // namespace ipgp
