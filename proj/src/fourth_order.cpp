#include "hetlayer/fourth_order.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hetlayer/effective.hpp"
#include "hetlayer/errors.hpp"

namespace hetlayer {

double energy4(const Potential& p, const Field2D& u, int jobs) {
  return layer_energy(p, u.grid, u.m, u.values, {}, Order::Fourth, jobs);
}

double action4(const Potential& p, const Field2D& u, const JMin& jmin) {
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const double ht = u.grid.ht(), hx = u.grid.hx();
  double mixed = 0.0;
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j + 1 < nx; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const double c =
            (u.at(i + 1, j + 1)[k] - u.at(i + 1, j)[k] - u.at(i, j + 1)[k] + u.at(i, j)[k]) / (ht * hx);
        row += hx * c * c;
      }
    mixed += ht * 0.5 * row;
  }
  return renormalized_action(p, u, jmin) + mixed;
}

LayerSolve minimize_layer4(const Potential& p, const HeteroclinicSet& F, const Grid2D& grid,
                           const std::optional<Field2D>& init, const LayerOptions& opts) {
  if (!F.two_labels() || !F.d_min_h1)
    throw HypothesisError(
        "partition hypothesis fails: the minimal heteroclinics form a single family, so there is no "
        "double layer to compute");
  if (grid.x != F.j_min.grid) throw std::invalid_argument("minimize_layer4: x-grid differs from the set's grid");
  LayerSolve s = minimize_layer_between(p, F.members[F.rep_minus_h1].path, F.members[F.rep_plus_h1].path, grid.t,
                                        init, opts, Order::Fourth);
  s.member_minus = F.rep_minus_h1;
  s.member_plus = F.rep_plus_h1;
  return s;
}

std::vector<Bump> weak_test_functions(const Grid2D& grid, int m, const WeakTestSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  double widths[3];
  for (double& w : widths) w = spec.min_half_width + (spec.max_half_width - spec.min_half_width) * unit(rng);
  const double T = grid.t.half_length(), L = grid.x.half_length();
  const double mt = (spec.margin + 0.5) * grid.ht(), mx = (spec.margin + 0.5) * grid.hx();
  std::vector<Bump> out;
  for (int n = 0; n < spec.count; ++n) {
    Bump b;
    const double w = widths[n % 3];
    b.wt = std::min(w, 0.5 * (T - mt));
    b.wx = std::min(w, 0.5 * (L - mx));
    auto lattice_point = [&](double half, double margin, double width) {
      const double lim = half - margin - width;
      const int k = static_cast<int>(std::floor(lim / spec.lattice));
      std::uniform_int_distribution<int> pick(-k, k);
      return pick(rng) * spec.lattice;
    };
    b.ct = lattice_point(T, mt, b.wt);
    b.cx = lattice_point(L, mx, b.wx);
    b.amplitude = 1.0;
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

double weak_form(const Potential& p, const Field2D& u, const Field2D& phi, int margin) {
  if (!(phi.grid == u.grid) || phi.m != u.m) throw std::invalid_argument("weak_form: grid mismatch");
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  const std::size_t mg = static_cast<std::size_t>(margin);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nx; ++j) {
      if (i >= mg && j >= mg && i + mg < nt && j + mg < nx) continue;
      for (double v : phi.at(i, j))
        if (v != 0.0) throw std::invalid_argument("weak_form: test function reaches the boundary margin");
    }
  const double ht = u.grid.ht(), hx = u.grid.hx();
  std::vector<double> gw(m);
  double s = 0.0;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nx; ++j) {
      auto a = u.at(i, j);
      auto fa = phi.at(i, j);
      p.gradient_unchecked(a, gw);
      for (std::size_t k = 0; k < m; ++k) {
        double v = u.grid.t.weight(i) * u.grid.x.weight(j) * gw[k] * fa[k];
        if (i + 1 < nt) v += u.grid.x.weight(j) * (u.at(i + 1, j)[k] - a[k]) * (phi.at(i + 1, j)[k] - fa[k]) / ht;
        if (j + 1 < nx) v += u.grid.t.weight(i) * (u.at(i, j + 1)[k] - a[k]) * (phi.at(i, j + 1)[k] - fa[k]) / hx;
        if (i + 1 < nt && j + 1 < nx) {
          const double cu = u.at(i + 1, j + 1)[k] - u.at(i + 1, j)[k] - u.at(i, j + 1)[k] + a[k];
          const double cp = phi.at(i + 1, j + 1)[k] - phi.at(i + 1, j)[k] - phi.at(i, j + 1)[k] + fa[k];
          v += cu * cp / (ht * hx);
        }
        s += v;
      }
    }
  return s;
}

double tensor_h1_norm(const Field2D& phi) {
  const std::size_t nt = phi.grid.rows(), nx = phi.grid.cols(), m = static_cast<std::size_t>(phi.m);
  const double ht = phi.grid.ht(), hx = phi.grid.hx();
  double s = 0.0;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nx; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const double a = phi.at(i, j)[k];
        s += phi.grid.t.weight(i) * phi.grid.x.weight(j) * a * a;
        if (i + 1 < nt) s += phi.grid.x.weight(j) * std::pow(phi.at(i + 1, j)[k] - a, 2) / ht;
        if (j + 1 < nx) s += phi.grid.t.weight(i) * std::pow(phi.at(i, j + 1)[k] - a, 2) / hx;
        if (i + 1 < nt && j + 1 < nx)
          s += std::pow(phi.at(i + 1, j + 1)[k] - phi.at(i + 1, j)[k] - phi.at(i, j + 1)[k] + a, 2) / (ht * hx);
      }
  return std::sqrt(s);
}

WeakResidual weak_residual(const Potential& p, const Field2D& u, const WeakTestSpec& spec) {
  WeakResidual r;
  for (const auto& b : weak_test_functions(u.grid, u.m, spec)) {
    const Field2D phi = bump_field(u.grid, u.m, b);
    const double v = std::fabs(weak_form(p, u, phi, spec.margin)) / tensor_h1_norm(phi);
    r.values.push_back(v);
    r.max = std::max(r.max, v);
  }
  return r;
}

Residual stencil_residual4(const Potential& p, const Field2D& u) {
  Residual r{0.0, Field2D(u.grid, u.m)};
  layer_energy(p, u.grid, u.m, u.values, r.field.values, Order::Fourth);
  const double area = u.grid.ht() * u.grid.hx();
  for (double& v : r.field.values) {
    v /= area;
    r.sup = std::max(r.sup, std::fabs(v));
  }
  return r;
}

}  // namespace hetlayer
