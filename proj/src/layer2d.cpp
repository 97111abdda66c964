#include "hetlayer/layer2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hetlayer/effective.hpp"
#include "hetlayer/errors.hpp"
#include "hetlayer/parallel.hpp"
#include "hetlayer/preconditioner.hpp"

namespace hetlayer {

namespace {

// Sum with element i paired with element n-1-i, so reversing the order of
// the terms gives a bit-identical result.
double mirror_sum(const std::vector<double>& v) {
  const std::size_t n = v.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n / 2; ++i) s += v[i] + v[n - 1 - i];
  if (n % 2 == 1) s += v[n / 2];
  return s;
}

double sqdist(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

// ------------------------------------------------------------ energy core

double layer_energy(const Potential& p, const Grid2D& grid, int m_, std::span<const double> u,
                    std::span<double> grad, Order order, int jobs) {
  const std::size_t nt = grid.rows(), nx = grid.cols(), m = static_cast<std::size_t>(m_);
  const double ht = grid.ht(), hx = grid.hx();
  const bool mixed = order == Order::Fourth;
  const bool want = !grad.empty();
  std::vector<double> A(nt), B(nt - 1);
  auto node = [&](std::size_t i, std::size_t j) { return u.data() + (i * nx + j) * m; };
  // Cell cross difference u(i+1,j+1) - u(i+1,j) - u(i,j+1) + u(i,j), component k.
  auto cross = [&](std::size_t i, std::size_t j, std::size_t k) {
    return node(i + 1, j + 1)[k] - node(i + 1, j)[k] - node(i, j + 1)[k] + node(i, j)[k];
  };

  parallel_for(nt, jobs, [&](std::size_t i) {
    std::vector<double> gw(m);
    double pot = 0.0, kin = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
      pot += grid.x.weight(j) * p.eval_unchecked({node(i, j), m});
      if (j + 1 < nx) kin += sqdist(node(i, j + 1), node(i, j), m);
    }
    A[i] = grid.t.weight(i) * (pot + 0.5 * kin / hx);

    if (i + 1 < nt) {
      double tk = 0.0;
      for (std::size_t j = 0; j < nx; ++j) tk += grid.x.weight(j) * sqdist(node(i + 1, j), node(i, j), m);
      double b = 0.5 * tk / ht;
      if (mixed) {
        double cc = 0.0;
        for (std::size_t j = 0; j + 1 < nx; ++j)
          for (std::size_t k = 0; k < m; ++k) {
            const double c = cross(i, j, k);
            cc += c * c;
          }
        b += 0.5 * cc / (ht * hx);
      }
      B[i] = b;
    }

    if (!want) return;
    double* g = grad.data() + i * nx * m;
    std::fill(g, g + nx * m, 0.0);
    if (i == 0 || i + 1 == nt) return;
    const double ct = hx / ht, cx = ht / hx, area = ht * hx;
    for (std::size_t j = 1; j + 1 < nx; ++j) {
      const double* c = node(i, j);
      p.gradient_unchecked({c, m}, gw);
      for (std::size_t k = 0; k < m; ++k) {
        double v = (2.0 * c[k] - node(i - 1, j)[k] - node(i + 1, j)[k]) * ct +
                   (2.0 * c[k] - node(i, j - 1)[k] - node(i, j + 1)[k]) * cx + area * gw[k];
        if (mixed)
          v += (cross(i, j, k) - cross(i - 1, j, k) - cross(i, j - 1, k) + cross(i - 1, j - 1, k)) / area;
        g[j * m + k] = v;
      }
    }
  });
  return mirror_sum(A) + mirror_sum(B);
}

double patch_energy(const Potential& p, const Field2D& u, std::size_t i0, std::size_t i1, std::size_t j0,
                    std::size_t j1, Order order) {
  const std::size_t m = static_cast<std::size_t>(u.m);
  const double ht = u.grid.ht(), hx = u.grid.hx();
  double e = 0.0;
  for (std::size_t i = i0; i < i1; ++i)
    for (std::size_t j = j0; j < j1; ++j) {
      const double* a = u.at(i, j).data();
      const double* b = u.at(i, j + 1).data();
      const double* c = u.at(i + 1, j).data();
      const double* d = u.at(i + 1, j + 1).data();
      const double dt = 0.5 * (sqdist(c, a, m) + sqdist(d, b, m)) / (ht * ht);
      const double dx = 0.5 * (sqdist(b, a, m) + sqdist(d, c, m)) / (hx * hx);
      const double w = 0.25 * (p.eval_unchecked({a, m}) + p.eval_unchecked({b, m}) + p.eval_unchecked({c, m}) +
                               p.eval_unchecked({d, m}));
      double cell = 0.5 * (dt + dx) + w;
      if (order == Order::Fourth) {
        double cc = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double x = (d[k] - c[k] - b[k] + a[k]) / (ht * hx);
          cc += x * x;
        }
        cell += 0.5 * cc;
      }
      e += cell * ht * hx;
    }
  return e;
}

double energy2d(const Potential& p, const Field2D& u, int jobs) {
  return layer_energy(p, u.grid, u.m, u.values, {}, Order::Second, jobs);
}

double renormalized_action(const Potential& p, const Field2D& u, const JMin& jmin) {
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const double ht = u.grid.ht();
  double s = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    if (i + 1 < nt) {
      double k = 0.0;
      for (std::size_t j = 0; j < nx; ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double d = (u.at(i + 1, j)[c] - u.at(i, j)[c]) / ht;
          d2 += d * d;
        }
        k += u.grid.x.weight(j) * d2;
      }
      s += ht * 0.5 * k;
    }
    s += u.grid.t.weight(i) * effective_potential_raw(p, u.row_path(i), jmin);
  }
  return s;
}

Field2D ball_project(const Potential& p, const Field2D& u) {
  if (!p.rho()) throw UnsupportedOperation("ball_project: potential carries no invariant-ball radius");
  const double rho = *p.rho();
  Field2D out = u;
  const std::size_t m = static_cast<std::size_t>(u.m);
  for (std::size_t n = 0; n < out.values.size(); n += m) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) r2 += out.values[n + k] * out.values[n + k];
    const double r = std::sqrt(r2);
    if (r > rho)
      for (std::size_t k = 0; k < m; ++k) out.values[n + k] *= rho / r;
  }
  return out;
}

Residual pde_residual(const Potential& p, const Field2D& u) {
  Residual res{0.0, Field2D(u.grid, u.m)};
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const double ht2 = u.grid.ht() * u.grid.ht(), hx2 = u.grid.hx() * u.grid.hx();
  std::vector<double> gw(m);
  for (std::size_t i = 1; i + 1 < nt; ++i)
    for (std::size_t j = 1; j + 1 < nx; ++j) {
      auto c = u.at(i, j);
      p.gradient_unchecked(c, gw);
      for (std::size_t k = 0; k < m; ++k) {
        const double lap = (u.at(i - 1, j)[k] - 2.0 * c[k] + u.at(i + 1, j)[k]) / ht2 +
                           (u.at(i, j - 1)[k] - 2.0 * c[k] + u.at(i, j + 1)[k]) / hx2;
        const double r = lap - gw[k];
        res.field.at(i, j)[k] = r;
        res.sup = std::max(res.sup, std::fabs(r));
      }
    }
  return res;
}

// ---------------------------------------------------------- equipartition

std::vector<EquipartitionRow> equipartition_rows(const Potential& p, const Field2D& u, const JMin& jmin,
                                                 Order order, double eps) {
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const double ht = u.grid.ht(), hx = u.grid.hx();
  std::vector<EquipartitionRow> rows;
  for (std::size_t i = 1; i + 1 < nt; ++i) {
    double kin = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = (u.at(i + 1, j)[k] - u.at(i - 1, j)[k]) / (2.0 * ht);
        d2 += d * d;
      }
      kin += u.grid.x.weight(j) * d2;
    }
    if (order == Order::Fourth) {
      for (std::size_t j = 0; j + 1 < nx; ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double d = (u.at(i + 1, j + 1)[k] - u.at(i + 1, j)[k] - u.at(i - 1, j + 1)[k] + u.at(i - 1, j)[k]) /
                           (2.0 * ht * hx);
          d2 += d * d;
        }
        kin += hx * d2;
      }
    }
    EquipartitionRow r;
    r.t = u.grid.t.node(i);
    r.lhs = 0.5 * kin;
    r.rhs = effective_potential_raw(p, u.row_path(i), jmin);
    r.diff = r.lhs - r.rhs;
    r.rel = std::fabs(r.diff) / (std::fabs(r.lhs) + std::fabs(r.rhs) + eps);
    rows.push_back(r);
  }
  return rows;
}

double max_equipartition(const std::vector<EquipartitionRow>& rows, double window) {
  double worst = 0.0;
  for (const auto& r : rows)
    if (std::fabs(r.t) <= window) worst = std::max(worst, r.rel);
  return worst;
}

// --------------------------------------------------------------- probes

std::vector<Bump> random_bumps(const Grid2D& grid, int m, const ProbeSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double T = grid.t.half_length(), L = grid.x.half_length();
  const double mt = (spec.margin + 0.5) * grid.ht(), mx = (spec.margin + 0.5) * grid.hx();
  auto lerp = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::vector<Bump> out;
  for (int n = 0; n < spec.count; ++n) {
    Bump b;
    b.wt = std::min(lerp(spec.min_half_width, spec.max_half_width), 0.5 * (T - mt));
    b.wx = std::min(lerp(spec.min_half_width, spec.max_half_width), 0.5 * (L - mx));
    b.ct = lerp(-T + mt + b.wt, T - mt - b.wt);
    b.cx = lerp(-L + mx + b.wx, L - mx - b.wx);
    b.amplitude = lerp(spec.min_amplitude, spec.max_amplitude);
    b.direction.resize(m);
    double n2 = 0.0;
    while (!(n2 > 1e-12)) {
      n2 = 0.0;
      for (double& x : b.direction) {
        x = normal(rng);
        n2 += x * x;
      }
    }
    for (double& x : b.direction) x /= std::sqrt(n2);
    out.push_back(std::move(b));
  }
  return out;
}

Field2D bump_field(const Grid2D& grid, int m, const Bump& b) {
  Field2D phi(grid, m);
  std::vector<double> ct(grid.rows(), 0.0), cx(grid.cols(), 0.0);
  auto profile = [](double s) {
    if (std::fabs(s) >= 1.0) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * s);
    return c * c;
  };
  for (std::size_t i = 0; i < grid.rows(); ++i) ct[i] = profile((grid.t.node(i) - b.ct) / b.wt);
  for (std::size_t j = 0; j < grid.cols(); ++j) cx[j] = profile((grid.x.node(j) - b.cx) / b.wx);
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    if (ct[i] == 0.0) continue;
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (cx[j] == 0.0) continue;
      for (int k = 0; k < m; ++k) phi.at(i, j)[k] = b.amplitude * b.direction[k] * ct[i] * cx[j];
    }
  }
  return phi;
}

double probe_energy_change(const Potential& p, const Field2D& u, const Field2D& phi, Order order, int margin) {
  if (!(phi.grid == u.grid) || phi.m != u.m) throw std::invalid_argument("probe: grid mismatch");
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols();
  std::size_t i_lo = nt, i_hi = 0, j_lo = nx, j_hi = 0;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nx; ++j)
      for (double v : phi.at(i, j))
        if (v != 0.0) {
          i_lo = std::min(i_lo, i), i_hi = std::max(i_hi, i);
          j_lo = std::min(j_lo, j), j_hi = std::max(j_hi, j);
        }
  if (i_lo == nt) return 0.0;
  const std::size_t mg = static_cast<std::size_t>(margin);
  if (i_lo < mg || j_lo < mg || i_hi + mg >= nt || j_hi + mg >= nx)
    throw std::invalid_argument("probe: support reaches the boundary margin");
  Field2D v = u;
  for (std::size_t i = i_lo; i <= i_hi; ++i)
    for (std::size_t j = j_lo; j <= j_hi; ++j)
      for (int k = 0; k < u.m; ++k) v.at(i, j)[k] += phi.at(i, j)[k];
  // Cells touching the support: lower-left corners i_lo-1 .. i_hi.
  const std::size_t i0 = i_lo - 1, i1 = i_hi + 1, j0 = j_lo - 1, j1 = j_hi + 1;
  return patch_energy(p, v, i0, i1, j0, j1, order) - patch_energy(p, u, i0, i1, j0, j1, order);
}

ProbeLedger minimality_probe(const Potential& p, const Field2D& u, const ProbeSpec& spec, Order order) {
  ProbeLedger ledger;
  const double E = layer_energy(p, u.grid, u.m, u.values, {}, order);
  ledger.threshold = spec.tolerance * (1.0 + std::fabs(E));
  ledger.min_delta = std::numeric_limits<double>::infinity();
  for (auto& b : random_bumps(u.grid, u.m, spec)) {
    ProbeRecord r;
    r.delta = probe_energy_change(p, u, bump_field(u.grid, u.m, b), order, spec.margin);
    r.passed = r.delta >= -ledger.threshold;
    r.bump = std::move(b);
    ledger.min_delta = std::min(ledger.min_delta, r.delta);
    ledger.all_passed = ledger.all_passed && r.passed;
    ledger.records.push_back(std::move(r));
  }
  if (ledger.records.empty()) ledger.min_delta = 0.0;
  return ledger;
}

// ------------------------------------------------------------ certificate

ClassCertificate class_certificate(const Potential& p, const Field2D& u, const HeteroclinicSet& F, Metric metric) {
  ClassCertificate cert;
  cert.metric = metric;
  const auto& d = metric == Metric::L2 ? F.d_min : F.d_min_h1;
  if (!d) throw HypothesisError("class certificate needs a heteroclinic set with two labels");
  if (u.grid.x != F.j_min.grid) throw std::invalid_argument("class certificate: x-grid differs from the set's grid");
  cert.threshold = *d / 4.0;
  const auto minus = F.with_label('-');
  const auto plus = F.with_label('+');
  const std::size_t nt = u.grid.rows();
  const double T = u.grid.t.half_length();
  for (std::size_t i = 0; i < nt; ++i) {
    const Path1D row = u.row_path(i);
    auto nearest = [&](const std::vector<const Heteroclinic*>& fam) {
      double best = std::numeric_limits<double>::infinity();
      for (const Heteroclinic* e : fam)
        best = std::min(best, best_translation(row, e->path, p.well_minus(), p.well_plus(), metric).distance);
      return best;
    };
    cert.t.push_back(u.grid.t.node(i));
    cert.dist_minus.push_back(nearest(minus));
    cert.dist_plus.push_back(nearest(plus));
  }
  cert.t_minus = cert.t.front();
  for (std::size_t i = 0; i < nt && cert.dist_minus[i] <= cert.threshold; ++i) cert.t_minus = cert.t[i];
  cert.t_plus = cert.t.back();
  for (std::size_t i = nt; i-- > 0 && cert.dist_plus[i] <= cert.threshold;) cert.t_plus = cert.t[i];
  cert.passed = true;
  for (std::size_t i = 0; i < nt; ++i) {
    if (cert.t[i] <= -T / 2 && cert.dist_minus[i] > cert.threshold) cert.passed = false;
    if (cert.t[i] >= T / 2 && cert.dist_plus[i] > cert.threshold) cert.passed = false;
  }
  return cert;
}

// ------------------------------------------------------------------ decay

bool LayerDecay::all_positive() const {
  for (const DecayFit* f : {&t_minus, &t_plus, &x_minus, &x_plus})
    if (f->degenerate || !(f->k > 0.0)) return false;
  return true;
}

LayerDecay layer_decay_fit(const Potential& p, const Field2D& u, const Path1D& e_minus, const Path1D& e_plus) {
  LayerDecay out;
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const double T = u.grid.t.half_length(), L = u.grid.x.half_length();
  std::vector<double> sl, dl, sr, dr;
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = u.grid.t.node(i);
    if (t >= T / 2 && t <= T - 1) {
      sr.push_back(t);
      dr.push_back(path_distance(u.row_path(i), e_plus, Metric::H1));
    } else if (t <= -T / 2 && t >= -T + 1) {
      sl.push_back(-t);
      dl.push_back(path_distance(u.row_path(i), e_minus, Metric::H1));
    }
  }
  out.t_minus = fit_exponential(sl, dl);
  out.t_plus = fit_exponential(sr, dr);

  const auto& am = p.well_minus();
  const auto& ap = p.well_plus();
  auto column_sup = [&](std::size_t j, const Point& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < nt; ++i) s = std::max(s, std::sqrt(sqdist(u.at(i, j).data(), a.data(), m)));
    return s;
  };
  std::vector<double> xl, yl, xr, yr;
  std::size_t j_uniform = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nx; ++j) {
    const double x = u.grid.x.node(j);
    if (x >= L / 2 && x <= L - 1) {
      xr.push_back(x);
      yr.push_back(column_sup(j, ap));
    } else if (x <= -L / 2 && x >= -L + 1) {
      xl.push_back(-x);
      yl.push_back(column_sup(j, am));
    }
    if (std::fabs(x - (L - 1)) < best_gap) best_gap = std::fabs(x - (L - 1)), j_uniform = j;
  }
  out.x_minus = fit_exponential(xl, yl);
  out.x_plus = fit_exponential(xr, yr);
  out.uniform_sup = column_sup(j_uniform, ap);
  const double xu = u.grid.x.node(j_uniform);
  out.uniform_bound = out.x_plus.degenerate ? 0.0 : out.x_plus.K * std::exp(-out.x_plus.k * xu);
  return out;
}

// --------------------------------------------------------------- minimize

LayerSolve minimize_layer_between(const Potential& p, const Path1D& e_minus, const Path1D& e_plus,
                                  const Grid1D& t_grid, const std::optional<Field2D>& init,
                                  const LayerOptions& opts, Order order) {
  const int m = p.dim();
  if (e_minus.m != m || e_plus.m != m || e_minus.grid != e_plus.grid)
    throw std::invalid_argument("minimize_layer: boundary curves do not match");
  if (!(opts.tolerance > 0.0)) throw std::invalid_argument("minimize_layer: tolerance must be positive");
  const Grid2D grid{t_grid, e_minus.grid};
  const std::size_t nt = grid.rows(), nx = grid.cols();
  const auto& am = p.well_minus();
  const auto& ap = p.well_plus();
  for (const Path1D* e : {&e_minus, &e_plus})
    for (int k = 0; k < m; ++k)
      if (e->at(0)[k] != am[k] || e->at(nx - 1)[k] != ap[k])
        throw std::invalid_argument("minimize_layer: boundary curves must end at the wells");

  Field2D u = init ? *init : smoothstep_initializer(t_grid, e_minus, e_plus);
  if (!(u.grid == grid) || u.m != m) throw std::invalid_argument("minimize_layer: init on a different grid");
  u.order = static_cast<int>(order);
  for (std::size_t j = 0; j < nx; ++j)
    for (int k = 0; k < m; ++k)
      if (u.at(0, j)[k] != e_minus.at(j)[k] || u.at(nt - 1, j)[k] != e_plus.at(j)[k])
        throw std::invalid_argument("minimize_layer: init violates the clamped rows");
  for (std::size_t i = 0; i < nt; ++i)
    for (int k = 0; k < m; ++k)
      if (u.at(i, 0)[k] != am[k] || u.at(i, nx - 1)[k] != ap[k])
        throw std::invalid_argument("minimize_layer: init violates the clamped columns");

  SpectralPreconditioner pre(grid, m, opts.shift, order == Order::Fourth);
  LbfgsOptions lo;
  lo.tolerance = opts.tolerance;
  lo.gradient_scale = grid.ht() * grid.hx();
  lo.max_iterations = opts.max_iterations;
  lo.preconditioner = [&pre](std::span<const double> g, std::span<double> out) { pre.apply(g, out); };
  auto f = [&](std::span<const double> v, std::span<double> g) {
    return layer_energy(p, grid, m, v, g, order, opts.jobs);
  };
  LbfgsResult r = minimize_lbfgs(f, u.values, lo);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "minimize_layer: " << r.status << " after " << r.iterations << " iterations (residual "
        << r.gradient_sup << ")";
    throw NonConvergenceError(msg.str(), std::move(u.values), r.gradient_sup, r.iterations);
  }
  if (!opts.keep_history) r.history.clear();
  LayerSolve out{std::move(u), std::move(r)};
  out.energy = out.stats.value;
  return out;
}

LayerSolve minimize_layer(const Potential& p, const HeteroclinicSet& F, const Grid2D& grid,
                          const std::optional<Field2D>& init, const LayerOptions& opts) {
  if (!F.two_labels())
    throw HypothesisError(
        "partition hypothesis fails: the minimal heteroclinics form a single family, so there is no "
        "double layer to compute");
  if (grid.x != F.j_min.grid) throw std::invalid_argument("minimize_layer: x-grid differs from the set's grid");
  LayerSolve s = minimize_layer_between(p, F.members[F.rep_minus].path, F.members[F.rep_plus].path, grid.t, init,
                                        opts, Order::Second);
  s.member_minus = F.rep_minus;
  s.member_plus = F.rep_plus;
  return s;
}

}  // namespace hetlayer
