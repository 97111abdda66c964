#include "hetlayer/heteroclinic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hetlayer/errors.hpp"
#include "hetlayer/optimizer.hpp"
#include "hetlayer/parallel.hpp"
#include "hetlayer/preconditioner.hpp"

namespace hetlayer {

Path1D::Path1D(Grid1D g, int dim, std::vector<double> v, bool clamp)
    : grid(g), m(dim), values(std::move(v)), clamped(clamp) {
  if (values.size() != g.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("Path1D: value count does not match grid");
}

// ------------------------------------------------------------------ action

double action_and_gradient(const Potential& p, const Grid1D& grid, int m, std::span<const double> v,
                           std::span<double> grad, bool clamped) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const std::size_t mm = static_cast<std::size_t>(m);
  const bool want_grad = !grad.empty();
  std::vector<double> gw(mm);
  double kinetic = 0.0, potential = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    auto vj = v.subspan(j * mm, mm);
    const double w = grid.weight(j);
    potential += w * p.eval_unchecked(vj);
    if (j + 1 < n) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < mm; ++k) {
        const double d = v[(j + 1) * mm + k] - vj[k];
        d2 += d * d;
      }
      kinetic += d2;
    }
    if (want_grad) {
      p.gradient_unchecked(vj, gw);
      for (std::size_t k = 0; k < mm; ++k) {
        double lap = 0.0;
        if (j > 0) lap += vj[k] - v[(j - 1) * mm + k];
        if (j + 1 < n) lap += vj[k] - v[(j + 1) * mm + k];
        grad[j * mm + k] = lap / h + w * gw[k];
      }
    }
  }
  if (want_grad && clamped) {
    for (std::size_t k = 0; k < mm; ++k) {
      grad[k] = 0.0;
      grad[(n - 1) * mm + k] = 0.0;
    }
  }
  return 0.5 * kinetic / h + potential;
}

double discrete_action(const Potential& p, const Path1D& v) {
  return action_and_gradient(p, v.grid, v.m, v.values, {}, v.clamped);
}

std::vector<double> action_gradient(const Potential& p, const Path1D& v) {
  std::vector<double> g(v.values.size());
  action_and_gradient(p, v.grid, v.m, v.values, g, v.clamped);
  return g;
}

Path1D segment_profile(const Potential& p, const Grid1D& grid) {
  const int m = p.dim();
  Path1D v(grid, m);
  const auto& am = p.well_minus();
  const auto& ap = p.well_plus();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.node(j);
    const double s = std::clamp((x + 1.0) / 2.0, 0.0, 1.0);
    for (int k = 0; k < m; ++k) {
      if (s == 0.0) v.at(j)[k] = am[k];
      else if (s == 1.0) v.at(j)[k] = ap[k];
      else v.at(j)[k] = am[k] + (ap[k] - am[k]) * s;
    }
  }
  return v;
}

// ------------------------------------------------------------- decay fits

DecayFit fit_exponential(std::span<const double> s, std::span<const double> d, double floor) {
  DecayFit fit;
  if (s.size() < 2 || s.size() != d.size()) return fit;
  fit.window_lo = *std::min_element(s.begin(), s.end());
  fit.window_hi = *std::max_element(s.begin(), s.end());
  for (double v : d)
    if (!(v > floor)) return fit;
  const double n = static_cast<double>(s.size());
  double ms = 0.0, my = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    my += std::log(d[i]);
  }
  ms /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    sxy += (s[i] - ms) * (std::log(d[i]) - my);
  }
  if (!(sxx > 0.0)) return fit;
  const double slope = sxy / sxx;
  const double intercept = my - slope * ms;
  double rss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = std::log(d[i]) - (intercept + slope * s[i]);
    rss += r * r;
  }
  fit.degenerate = false;
  fit.k = -slope;
  fit.K = std::exp(intercept);
  fit.residual = std::sqrt(rss / n);
  return fit;
}

TailFits fit_decay(const Path1D& e, std::span<const double> a_minus, std::span<const double> a_plus) {
  const double L = e.grid.half_length();
  std::vector<double> sl, dl, sr, dr;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double x = e.grid.node(j);
    auto v = e.at(j);
    if (x >= L / 2 && x <= L - 1) {
      double d2 = 0.0;
      for (int k = 0; k < e.m; ++k) d2 += (v[k] - a_plus[k]) * (v[k] - a_plus[k]);
      sr.push_back(x);
      dr.push_back(std::sqrt(d2));
    } else if (x <= -L / 2 && x >= -L + 1) {
      double d2 = 0.0;
      for (int k = 0; k < e.m; ++k) d2 += (v[k] - a_minus[k]) * (v[k] - a_minus[k]);
      sl.push_back(-x);
      dl.push_back(std::sqrt(d2));
    }
  }
  return {fit_exponential(sl, dl), fit_exponential(sr, dr)};
}

double first_integral_residual(const Potential& p, const Path1D& e) {
  const double h = e.grid.spacing();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < e.size(); ++j) {
    double kin = 0.0;
    for (int k = 0; k < e.m; ++k) {
      const double d = (e.at(j + 1)[k] - e.at(j - 1)[k]) / (2.0 * h);
      kin += d * d;
    }
    worst = std::max(worst, std::fabs(0.5 * kin - p.eval_unchecked(e.at(j))));
  }
  return worst;
}

// -------------------------------------------------------------- translation

Path1D translate(const Path1D& e, double tau, std::span<const double> a_minus,
                 std::span<const double> a_plus) {
  const std::size_t n = e.size();
  const double shift = tau / e.grid.spacing();
  Path1D out(e.grid, e.m);
  out.clamped = e.clamped;
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = static_cast<double>(j) - shift;
    auto dst = out.at(j);
    if (pos < 0.0) {
      std::copy(a_minus.begin(), a_minus.end(), dst.begin());
    } else if (pos > static_cast<double>(n - 1)) {
      std::copy(a_plus.begin(), a_plus.end(), dst.begin());
    } else {
      std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
      const double f = pos - static_cast<double>(i);
      auto lo = e.at(i);
      auto hi = e.at(i + 1);
      for (int k = 0; k < e.m; ++k) dst[k] = f == 0.0 ? lo[k] : lo[k] + f * (hi[k] - lo[k]);
    }
  }
  if (e.clamped) {
    std::copy(a_minus.begin(), a_minus.end(), out.at(0).begin());
    std::copy(a_plus.begin(), a_plus.end(), out.at(n - 1).begin());
  }
  return out;
}

Path1D pin_translation(const Path1D& e, std::span<const double> a_minus, std::span<const double> a_plus) {
  const int m = e.m;
  std::vector<double> axis(m), mid(m);
  double len = 0.0;
  for (int k = 0; k < m; ++k) {
    axis[k] = a_plus[k] - a_minus[k];
    mid[k] = 0.5 * (a_plus[k] + a_minus[k]);
    len += axis[k] * axis[k];
  }
  len = std::sqrt(len);
  if (!(len > 0.0)) throw PinningError("pin_translation: wells coincide");
  for (double& a : axis) a /= len;

  std::vector<double> proj(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += (e.at(j)[k] - mid[k]) * axis[k];
    proj[j] = s;
  }
  const double h = e.grid.spacing();
  std::optional<double> best;
  for (std::size_t j = 0; j + 1 < e.size(); ++j) {
    const double p0 = proj[j], p1 = proj[j + 1];
    double x0;
    if (p0 == 0.0) {
      x0 = e.grid.node(j);
    } else if ((p0 < 0.0 && p1 > 0.0) || (p0 > 0.0 && p1 < 0.0)) {
      x0 = e.grid.node(j) + h * (p0 / (p0 - p1));
    } else {
      continue;
    }
    if (!best || std::fabs(x0) < std::fabs(*best)) best = x0;
  }
  if (proj.back() == 0.0 && (!best || std::fabs(e.grid.node(e.size() - 1)) < std::fabs(*best)))
    best = e.grid.node(e.size() - 1);
  if (!best) throw PinningError("pin_translation: projection on the well axis never changes sign");
  return translate(e, -*best, a_minus, a_plus);
}

// -------------------------------------------------------------- minimizing

namespace {

struct Axis {
  std::vector<double> n, mid;
};

Axis well_axis(std::span<const double> a_minus, std::span<const double> a_plus) {
  Axis ax{std::vector<double>(a_minus.size()), std::vector<double>(a_minus.size())};
  double len = 0.0;
  for (std::size_t k = 0; k < a_minus.size(); ++k) {
    ax.n[k] = a_plus[k] - a_minus[k];
    ax.mid[k] = 0.5 * (a_plus[k] + a_minus[k]);
    len += ax.n[k] * ax.n[k];
  }
  len = std::sqrt(len);
  for (double& v : ax.n) v /= len;
  return ax;
}

// Removes the well-axis component at node c (the pinning constraint).
void project_out(std::span<double> v, std::size_t c, const Axis& ax) {
  const std::size_t m = ax.n.size();
  double s = 0.0;
  for (std::size_t k = 0; k < m; ++k) s += v[c * m + k] * ax.n[k];
  for (std::size_t k = 0; k < m; ++k) v[c * m + k] -= s * ax.n[k];
}

LbfgsResult run_lbfgs(const Potential& p, const Grid1D& grid, std::vector<double>& x,
                      const HeteroclinicOptions& opts, const Axis* pin) {
  const int m = p.dim();
  const std::size_t centre = grid.size() / 2;
  TridiagonalPreconditioner pre(grid, m, 1.0);
  LbfgsOptions lo;
  lo.tolerance = opts.tolerance;
  lo.gradient_scale = grid.spacing();
  lo.max_iterations = opts.max_iterations;
  lo.preconditioner = [&](std::span<const double> g, std::span<double> out) {
    pre.apply(g, out);
    if (pin) project_out(out, centre, *pin);
  };
  auto f = [&](std::span<const double> v, std::span<double> g) {
    const double val = action_and_gradient(p, grid, m, v, g, true);
    if (pin) project_out(g, centre, *pin);
    return val;
  };
  return minimize_lbfgs(f, x, lo);
}

[[noreturn]] void fail(const char* stage, const LbfgsResult& r, std::vector<double> x) {
  std::ostringstream msg;
  msg << "minimize_heteroclinic (" << stage << "): " << r.status << " after " << r.iterations
      << " iterations (residual " << r.gradient_sup << ")";
  throw NonConvergenceError(msg.str(), std::move(x), r.gradient_sup, r.iterations);
}

}  // namespace

Heteroclinic minimize_heteroclinic(const Potential& p, const Path1D& init, const HeteroclinicOptions& opts) {
  const int m = p.dim();
  if (init.m != m) throw std::invalid_argument("minimize_heteroclinic: dimension mismatch");
  const auto& am = p.well_minus();
  const auto& ap = p.well_plus();
  const std::size_t n = init.size();
  for (int k = 0; k < m; ++k)
    if (init.at(0)[k] != am[k] || init.at(n - 1)[k] != ap[k])
      throw std::invalid_argument("minimize_heteroclinic: init must be clamped to the wells");
  if (!(opts.tolerance > 0.0)) throw std::invalid_argument("minimize_heteroclinic: tolerance must be positive");

  const Grid1D grid = init.grid;
  std::vector<double> x = init.values;
  LbfgsResult r = run_lbfgs(p, grid, x, opts, nullptr);
  if (!r.converged) fail("free", r, std::move(x));
  int iterations = r.iterations;

  // Resampling for the shift costs O(shift) in the residual, and the
  // translation mode is nearly flat on a long interval, so polish again with
  // the axis component at x = 0 held fixed.
  Path1D pinned = pin_translation(Path1D(grid, m, std::move(x)), am, ap);
  if (n % 2 == 1) {
    const Axis ax = well_axis(am, ap);
    auto c = pinned.at(n / 2);
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += (c[k] - ax.mid[k]) * ax.n[k];
    for (int k = 0; k < m; ++k) c[k] -= s * ax.n[k];
    r = run_lbfgs(p, grid, pinned.values, opts, &ax);
    if (!r.converged) fail("pinned", r, std::move(pinned.values));
    iterations += r.iterations;
  }

  Heteroclinic e{.path = std::move(pinned)};
  e.action = discrete_action(p, e.path);
  e.decay = fit_decay(e.path, am, ap);
  e.first_integral = first_integral_residual(p, e.path);
  e.gradient_sup = r.gradient_sup;
  e.iterations = iterations;
  return e;
}

// --------------------------------------------------------------- distances

double path_norm(std::span<const double> diff, const Grid1D& grid, int m, Metric metric) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  double l2 = 0.0, dx = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += diff[j * m + k] * diff[j * m + k];
    l2 += grid.weight(j) * s;
    if (metric == Metric::H1 && j + 1 < n) {
      double t = 0.0;
      for (int k = 0; k < m; ++k) {
        const double d = diff[(j + 1) * m + k] - diff[j * m + k];
        t += d * d;
      }
      dx += t / h;
    }
  }
  return std::sqrt(l2 + dx);
}

double path_distance(const Path1D& a, const Path1D& b, Metric metric) {
  if (a.grid != b.grid || a.m != b.m) throw std::invalid_argument("path_distance: grid mismatch");
  std::vector<double> d(a.values.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values[i] - b.values[i];
  return path_norm(d, a.grid, a.m, metric);
}

TranslationMatch best_translation(const Path1D& u, const Path1D& e, std::span<const double> a_minus,
                                  std::span<const double> a_plus, Metric metric) {
  if (u.grid != e.grid || u.m != e.m) throw std::invalid_argument("best_translation: grid mismatch");
  const double half = u.grid.half_length() / 2.0;
  const double step = 10.0 * u.grid.spacing();
  auto dist = [&](double tau) { return path_distance(u, translate(e, tau, a_minus, a_plus), metric); };

  TranslationMatch best{dist(0.0), 0.0};
  const int steps = static_cast<int>(std::floor(half / step));
  for (int i = -steps; i <= steps; ++i) {
    const double tau = i * step;
    const double d = dist(tau);
    if (d < best.distance) best = {d, tau};
  }

  double lo = std::max(-half, best.tau - step);
  double hi = std::min(half, best.tau + step);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
  double fc = dist(c), fd = dist(d);
  while (hi - lo > 1e-6) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = dist(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = dist(d);
    }
  }
  const double tau = 0.5 * (lo + hi);
  const double fm = dist(tau);
  if (fm < best.distance) best = {fm, tau};
  return best;
}

// ----------------------------------------------------------------- the set

bool HeteroclinicSet::two_labels() const {
  bool plus = false, minus = false;
  for (const auto& e : members) (e.label == '-' ? minus : plus) = true;
  return plus && minus;
}

std::vector<const Heteroclinic*> HeteroclinicSet::with_label(char label) const {
  std::vector<const Heteroclinic*> out;
  for (const auto& e : members)
    if (e.label == label) out.push_back(&e);
  return out;
}

std::vector<Path1D> default_starts(const Potential& p, const Grid1D& grid) {
  std::vector<Path1D> starts{segment_profile(p, grid)};
  if (p.dim() == 2 && p.symmetric_in_u2()) {
    for (double amp : {1.0, -1.0}) {
      Path1D v = segment_profile(p, grid);
      for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
        const double x = grid.node(j);
        if (std::fabs(x) < 3.0) {
          const double c = std::cos(std::numbers::pi * x / 6.0);
          v.at(j)[1] += amp * c * c;
        }
      }
      starts.push_back(std::move(v));
    }
  }
  return starts;
}

char default_label(const Potential& p, const Path1D& e) {
  if (e.m < 2 || !p.symmetric_in_u2()) return '+';
  double best = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j)
    if (std::fabs(e.at(j)[1]) > std::fabs(best)) best = e.at(j)[1];
  // Numerically flat u2 is the on-axis case.
  return best < -1e-8 ? '-' : '+';
}

HeteroclinicSet build_heteroclinic_set(const Potential& p, const Grid1D& grid, const MultistartSpec& spec) {
  std::vector<Path1D> starts = spec.starts.empty() ? default_starts(p, grid) : spec.starts;
  for (const auto& s : starts)
    if (s.grid != grid) throw std::invalid_argument("build_heteroclinic_set: start on a different grid");

  std::vector<std::optional<Heteroclinic>> runs(starts.size());
  std::vector<std::string> failures(starts.size());
  parallel_for(starts.size(), spec.jobs, [&](std::size_t i) {
    try {
      runs[i] = minimize_heteroclinic(p, starts[i], spec.solver);
      runs[i]->start_index = i;
    } catch (const NonConvergenceError& err) {
      failures[i] = err.what();
    }
  });

  std::vector<Heteroclinic> distinct;
  for (auto& r : runs) {
    if (!r) continue;
    bool dup = false;
    for (const auto& kept : distinct)
      if (path_distance(kept.path, r->path, Metric::L2) <= spec.dedup_tolerance) dup = true;
    if (!dup) distinct.push_back(std::move(*r));
  }
  if (distinct.empty()) {
    std::string all;
    for (const auto& f : failures) all += (all.empty() ? "" : "; ") + f;
    throw NonConvergenceError("build_heteroclinic_set: no start converged: " + all, {}, 0.0, 0);
  }

  double jmin = std::numeric_limits<double>::infinity();
  for (const auto& e : distinct) jmin = std::min(jmin, e.action);

  HeteroclinicSet set{.j_min = JMin{jmin, grid}};
  for (auto& e : distinct) {
    e.label = spec.labeler ? spec.labeler(p, e.path) : default_label(p, e.path);
    (e.action <= jmin + spec.action_tolerance ? set.members : set.discarded).push_back(std::move(e));
  }

  if (set.two_labels()) {
    const auto& am = p.well_minus();
    const auto& ap = p.well_plus();
    for (Metric metric : {Metric::L2, Metric::H1}) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < set.members.size(); ++i) {
        if (set.members[i].label != '-') continue;
        for (std::size_t j = 0; j < set.members.size(); ++j) {
          if (set.members[j].label != '+') continue;
          const double d = best_translation(set.members[i].path, set.members[j].path, am, ap, metric).distance;
          if (d < best) best = d, bi = i, bj = j;
        }
      }
      if (metric == Metric::L2) set.d_min = best, set.rep_minus = bi, set.rep_plus = bj;
      else set.d_min_h1 = best, set.rep_minus_h1 = bi, set.rep_plus_h1 = bj;
    }
  } else if (spec.require_two_labels) {
    std::ostringstream msg;
    msg << "heteroclinic set does not split into two labels: found " << set.members.size()
        << " minimal member(s), all labelled '" << set.members.front().label << "', J_min = " << jmin;
    throw PartitionError(msg.str());
  }
  return set;
}

}  // namespace hetlayer
