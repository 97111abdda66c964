#include "hetlayer/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace hetlayer {

double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

void apply_initial(const LbfgsOptions& opts, double gamma, std::span<const double> q,
                   std::span<double> r) {
  if (opts.preconditioner) {
    opts.preconditioner(q, r);
  } else {
    for (std::size_t i = 0; i < q.size(); ++i) r[i] = gamma * q[i];
  }
}

// Two-loop recursion: d = -H g.
void search_direction(const std::deque<Pair>& mem, const LbfgsOptions& opts, double gamma,
                      std::span<const double> g, std::vector<double>& d,
                      std::vector<double>& q, std::vector<double>& alpha) {
  q.assign(g.begin(), g.end());
  alpha.resize(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    alpha[k] = mem[k].rho * dot(mem[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * mem[k].y[i];
  }
  d.resize(g.size());
  apply_initial(opts, gamma, q, d);
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double beta = mem[k].rho * dot(mem[k].y, d);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - beta) * mem[k].s[i];
  }
  for (double& v : d) v = -v;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double>& x, const LbfgsOptions& opts) {
  const std::size_t n = x.size();
  LbfgsResult res;
  std::vector<double> g(n), g_new(n), x_new(n), d, q, alpha;
  double fx = f(x, g);
  ++res.evaluations;
  res.history.push_back(fx);

  std::deque<Pair> mem;
  double gamma = 1.0;
  bool first_step = true;

  for (;;) {
    res.gradient_sup = sup_norm(g) / opts.gradient_scale;
    res.value = fx;
    if (!std::isfinite(fx)) {
      res.status = "non-finite objective";
      return res;
    }
    if (res.gradient_sup <= opts.tolerance) {
      res.converged = true;
      res.status = "converged";
      return res;
    }
    if (res.iterations >= opts.max_iterations) {
      res.status = "iteration cap reached";
      return res;
    }

    search_direction(mem, opts, gamma, g, d, q, alpha);
    double gd = dot(g, d);
    if (!(gd < 0.0)) {
      mem.clear();
      search_direction(mem, opts, gamma, g, d, q, alpha);
      gd = dot(g, d);
      if (!(gd < 0.0)) {
        res.status = "no descent direction";
        return res;
      }
    }

    double step = 1.0;
    if (first_step && !opts.preconditioner) step = std::min(1.0, 1.0 / sup_norm(d));

    bool accepted = false;
    double f_new = fx;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new)) {
        if (f_new <= fx + opts.armijo * step * gd) {
          accepted = true;
          break;
        }
        // Rounding-noise regime: approximate Wolfe test on the slope.
        const double slope = dot(g_new, d);
        if (f_new <= fx + opts.noise_level * std::fabs(fx) && slope >= 0.9 * gd &&
            slope <= -0.8 * gd) {
          accepted = true;
          break;
        }
        const double denom = 2.0 * (f_new - fx - gd * step);
        double next = denom > 0.0 ? -gd * step * step / denom : 0.5 * step;
        step = std::clamp(next, 0.1 * step, 0.5 * step);
      } else {
        step *= 0.1;
      }
    }

    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      res.status = "line search stalled";
      return res;
    }

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    const double yy = dot(p.y, p.y);
    if (sy > 1e-16 * std::sqrt(dot(p.s, p.s) * yy) && sy > 0.0) {
      p.rho = 1.0 / sy;
      gamma = sy / yy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }

    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    res.history.push_back(fx);
    ++res.iterations;
    first_step = false;
  }
}

}  // namespace hetlayer
