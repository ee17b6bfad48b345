#include "mcbd/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace mcbd::optim {
namespace {

using Vec = Eigen::VectorXd;

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
};

class LineSearch {
 public:
  LineSearch(const Objective& obj, const Vec& x, const Vec& dir, double f0, double slope0,
             const LbfgsOptions& opt, int& evaluations)
      : obj_(obj), x_(x), dir_(dir), f0_(f0), slope0_(slope0), opt_(opt), evals_(evaluations) {
    trial_grad_.resize(x.size());
  }

  // Strong Wolfe step along dir starting at alpha0; nullopt on failure.
  std::optional<double> run(double alpha0) {
    Point prev{0.0, f0_, slope0_};
    double alpha = alpha0;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      const Point cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) return accept(cur);
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = cur;
      alpha *= 2.0;
    }
    return std::nullopt;
  }

  double f() const { return best_.f; }
  const Vec& grad() const { return best_grad_; }

 private:
  Point eval(double alpha) {
    ++evals_;
    const double fa = obj_(x_ + alpha * dir_, trial_grad_);
    return {alpha, fa, trial_grad_.dot(dir_)};
  }

  double accept(const Point& p) {
    best_ = p;
    best_grad_ = trial_grad_;
    return p.alpha;
  }

  // Cubic interpolation minimizer of the two bracketing points, safeguarded
  // to stay inside the middle 80% of the bracket.
  static double interpolate(const Point& a, const Point& b) {
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    const double width = hi - lo;
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
      const double denom = b.slope - a.slope + 2.0 * d2;
      if (denom != 0.0) t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    }
    if (!std::isfinite(t) || t < lo + 0.1 * width || t > hi - 0.1 * width) t = 0.5 * (lo + hi);
    return t;
  }

  std::optional<double> zoom(Point lo, Point hi) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      if (std::abs(hi.alpha - lo.alpha) <=
          std::numeric_limits<double>::epsilon() * std::max(lo.alpha, hi.alpha)) {
        break;
      }
      const Point cur = eval(interpolate(lo, hi));
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * cur.alpha * slope0_ || cur.f >= lo.f) {
        hi = cur;
        continue;
      }
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) return accept(cur);
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
    return std::nullopt;
  }

  const Objective& obj_;
  const Vec& x_;
  const Vec& dir_;
  double f0_;
  double slope0_;
  const LbfgsOptions& opt_;
  int& evals_;
  Vec trial_grad_;
  Point best_;
  Vec best_grad_;
};

// Two-loop recursion: returns -H g.
Vec lbfgs_direction(const Vec& g, const std::deque<Vec>& s, const std::deque<Vec>& y,
                    const std::deque<double>& rho) {
  Vec q = g;
  const std::size_t m = s.size();
  std::vector<double> a(m);
  for (std::size_t i = m; i-- > 0;) {
    a[i] = rho[i] * s[i].dot(q);
    q -= a[i] * y[i];
  }
  if (m > 0) q *= s.back().dot(y.back()) / y.back().squaredNorm();
  for (std::size_t i = 0; i < m; ++i) {
    const double b = rho[i] * y[i].dot(q);
    q += (a[i] - b) * s[i];
  }
  return -q;
}

bool gradient_small(const Vec& g, double f, const LbfgsOptions& opt) {
  return g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * std::max(1.0, std::abs(f));
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Vec x0, const LbfgsOptions& options) {
  LbfgsResult res;
  res.x = std::move(x0);
  res.grad.resize(res.x.size());
  res.f = objective(res.x, res.grad);
  res.evaluations = 1;
  res.accepted_values.push_back(res.f);

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;

  while (true) {
    if (gradient_small(res.grad, res.f, options)) {
      res.status = LbfgsStatus::GradientConverged;
      return res;
    }
    if (res.iterations >= options.max_iters) {
      res.status = LbfgsStatus::MaxIterations;
      return res;
    }

    Vec dir = lbfgs_direction(res.grad, s_hist, y_hist, rho_hist);
    double slope = res.grad.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      dir = -res.grad;
      slope = -res.grad.squaredNorm();
    }
    const double alpha0 =
        s_hist.empty() ? std::min(1.0, 1.0 / std::max(res.grad.lpNorm<Eigen::Infinity>(), 1e-300))
                       : 1.0;

    LineSearch ls(objective, res.x, dir, res.f, slope, options, res.evaluations);
    Vec new_x, new_g;
    double new_f = 0.0;
    if (auto alpha = ls.run(alpha0)) {
      new_x = res.x + *alpha * dir;
      new_g = ls.grad();
      new_f = ls.f();
    } else {
      // Backtracking steepest descent with the Armijo condition.
      ++res.fallback_steps;
      const Vec sd = -res.grad;
      const double sd_slope = -res.grad.squaredNorm();
      double step = 1.0 / std::max(res.grad.lpNorm<Eigen::Infinity>(), 1e-300);
      bool ok = false;
      new_g.resize(res.x.size());
      for (int k = 0; k < 60 && !ok; ++k, step *= 0.5) {
        new_x = res.x + step * sd;
        new_f = objective(new_x, new_g);
        ++res.evaluations;
        ok = std::isfinite(new_f) && new_f <= res.f + options.c1 * step * sd_slope && new_f < res.f;
      }
      if (!ok) {
        res.status = LbfgsStatus::LineSearchFailed;
        return res;
      }
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
    }

    const Vec s = new_x - res.x;
    const Vec y = new_g - res.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == options.memory) {
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      }
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
    }
    res.x = std::move(new_x);
    res.grad = std::move(new_g);
    res.f = new_f;
    ++res.iterations;
    res.accepted_values.push_back(res.f);
  }
}

}  // namespace mcbd::optim
