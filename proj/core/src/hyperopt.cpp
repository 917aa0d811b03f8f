/*
 * Copyright 2026 the evocov authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "evocov/hyperopt.hpp"

#include <cmath>
#include <random>

namespace evocov {

int OptBudget::max_fun_call() const {
  double len = static_cast<double>(series_len);
  double raw = static_cast<double>(ref_fun_call) * (350.0 * 350.0) / (len * len);
  int v = static_cast<int>(std::floor(raw));
  return std::max(v, 1);
}

InitStrategy InitStrategy::inherited(std::vector<double> center, double sigma) {
  InitStrategy s;
  s.inherit = true;
  s.center = std::move(center);
  s.sigma = sigma;
  return s;
}

namespace {

constexpr double kGold = 1.618033988749895;
constexpr double kCGold = 0.3819660112501051;

struct Evaluator {
  const std::function<double(const Eigen::VectorXd&)>& fn;
  int cap;
  int evals = 0;
  Eigen::VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();

  bool exhausted() const { return evals >= cap; }

  double operator()(const Eigen::VectorXd& x) {
    ++evals;
    double v = fn(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
    return v;
  }
};

// Minimizes g(t) = f(p + t * dir) by bracketing plus Brent's method,
// spending at most line_cap evaluations.  Returns the best (t, g(t)) seen;
// t = 0 corresponds to the incoming point with known value f_p.
struct LineResult {
  double t = 0.0;
  double f;
};

LineResult line_minimize(Evaluator& ev, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& dir, double f_p, int line_cap) {
  LineResult best{0.0, f_p};
  int used = 0;
  auto g = [&](double t) {
    ++used;
    double v = ev(p + t * dir);
    if (v < best.f) best = {t, v};
    return v;
  };
  auto can = [&] { return used < line_cap && !ev.exhausted(); };

  // Bracket a minimum.
  double a = 0.0, fa = f_p;
  if (!can()) return best;
  double b = 1.0, fb = g(b);
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  if (!can()) return best;
  double c = b + kGold * (b - a);
  double fc = g(c);
  while (fb > fc) {
    if (!can()) return best;
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c = b + kGold * (b - a);
    fc = g(c);
  }

  // Brent's parabolic-interpolation search inside [lo, hi].
  double lo = std::min(a, c), hi = std::max(a, c);
  double x = b, w = b, v = b;
  double fx = fb, fw = fb, fv = fb;
  double d = 0.0, e = 0.0;
  const double tol = 1e-10;
  while (can()) {
    double xm = 0.5 * (lo + hi);
    double tol1 = tol * std::abs(x) + 1e-12;
    double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (hi - lo)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double pn = (x - v) * q - (x - w) * r;
      double qn = 2.0 * (q - r);
      if (qn > 0.0) pn = -pn;
      qn = std::abs(qn);
      double etemp = e;
      e = d;
      if (std::abs(pn) < std::abs(0.5 * qn * etemp) && pn > qn * (lo - x) &&
          pn < qn * (hi - x)) {
        d = pn / qn;
        double u = x + d;
        if (u - lo < tol2 || hi - u < tol2) d = (xm > x) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? lo - x : hi - x;
      d = kCGold * e;
    }
    double u = (std::abs(d) >= tol1) ? x + d : x + ((d > 0.0) ? tol1 : -tol1);
    double fu = g(u);
    if (fu <= fx) {
      if (u >= x) lo = x; else hi = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) lo = u; else hi = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return best;
}

}  // namespace

PowellResult powell_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const PowellOptions& opts) {
  Evaluator ev{objective, std::max(opts.max_evals, 1)};
  const Eigen::Index q = x0.size();
  Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(q, q);
  Eigen::VectorXd x = x0;
  double fx = ev(x0);
  while (!ev.exhausted()) {
    double f_start = fx;
    Eigen::VectorXd x_start = x;
    double biggest_dec = 0.0;
    Eigen::Index ibig = 0;
    for (Eigen::Index i = 0; i < q && !ev.exhausted(); ++i) {
      double f_prev = fx;
      LineResult lr = line_minimize(ev, x, dirs.col(i), fx, opts.line_eval_cap);
      x += lr.t * dirs.col(i);
      fx = lr.f;
      if (f_prev - fx > biggest_dec) {
        biggest_dec = f_prev - fx;
        ibig = i;
      }
    }
    if (2.0 * (f_start - fx) <= opts.ftol * (std::abs(f_start) + std::abs(fx)) + 1e-25) {
      break;
    }
    if (ev.exhausted()) break;
    // Direction replacement test on the extrapolated point.
    Eigen::VectorXd xe = 2.0 * x - x_start;
    double fe = ev(xe);
    if (fe < f_start) {
      double a = f_start - fx - biggest_dec;
      double t = 2.0 * (f_start - 2.0 * fx + fe) * a * a -
                 biggest_dec * (f_start - fe) * (f_start - fe);
      if (t < 0.0) {
        Eigen::VectorXd dnew = x - x_start;
        LineResult lr = line_minimize(ev, x, dnew, fx, opts.line_eval_cap);
        x += lr.t * dnew;
        fx = lr.f;
        dirs.col(ibig) = dirs.col(q - 1);
        dirs.col(q - 1) = dnew;
      }
    }
  }
  PowellResult out;
  out.x = (ev.best_f <= fx) ? ev.best_x : x;
  out.f = std::min(ev.best_f, fx);
  out.evals = ev.evals;
  return out;
}

std::function<double(const Eigen::VectorXd&)> penalized_objective(
    const KernelExpr& expr, const Dataset& train, MetricKind metric,
    const ThetaVector& theta_template) {
  bool flip = !lower_is_better(metric);
  return [expr, train, metric, theta_template, flip](const Eigen::VectorXd& x) {
    double violation = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const SlotBounds& b = theta_template.bounds[static_cast<std::size_t>(i)];
      if (x(i) < b.lo) violation += (b.lo - x(i)) * (b.lo - x(i));
      if (x(i) > b.hi) violation += (x(i) - b.hi) * (x(i) - b.hi);
    }
    if (violation > 0.0) return kPenalty + violation;
    ThetaVector theta = theta_template;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      theta.values[static_cast<std::size_t>(i)] = x(i);
    }
    try {
      double v = metric_value(metric, expr, theta, train);
      if (!std::isfinite(v)) return kPenalty;
      return flip ? -v : v;
    } catch (const EvalError&) {
      return kPenalty;
    } catch (const FactorizationError&) {
      return kPenalty;
    }
  };
}

OptResult optimize_hyperparams(const KernelExpr& expr, const Dataset& train,
                               MetricKind metric, const OptBudget& budget,
                               const InitStrategy& init,
                               const ThetaVector& theta_template,
                               std::uint64_t seed, const PowellOptions& powell) {
  auto objective = penalized_objective(expr, train, metric, theta_template);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  OptResult out;
  out.theta_best = theta_template;
  const std::size_t q = theta_template.size();
  int remaining = budget.max_fun_call();
  bool first = true;
  while (remaining > 0) {
    Eigen::VectorXd x0(static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < q; ++i) {
      double c = (init.inherit && i < init.center.size())
                     ? init.center[i]
                     : std::numeric_limits<double>::quiet_NaN();
      if (std::isnan(c)) {
        x0(static_cast<Eigen::Index>(i)) = sample_slot(theta_template.bounds[i], rng);
      } else if (first) {
        x0(static_cast<Eigen::Index>(i)) = c;
      } else {
        x0(static_cast<Eigen::Index>(i)) = c + init.sigma * gauss(rng);
      }
    }
    PowellOptions opts = powell;
    opts.max_evals = std::min(powell.max_evals, remaining);
    PowellResult res = powell_minimize(objective, x0, opts);
    remaining -= res.evals;
    out.fun_calls_used += res.evals;
    ++out.restarts;
    if (res.f < out.score_best) {
      out.score_best = res.f;
      for (std::size_t i = 0; i < q; ++i) {
        out.theta_best.values[i] = res.x(static_cast<Eigen::Index>(i));
      }
    }
    first = false;
    if (res.evals == 0) break;  // objective unexpectedly free; avoid spinning
  }
  out.all_penalized = !(out.score_best < kPenalty);
  return out;
}

}  // namespace evocov
