#include "hetlayer/abstract_orbit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hetlayer {

std::vector<double> AbstractOrbit::sample(double time) const {
  if (time <= t.front()) {
    auto v = at(0);
    return {v.begin(), v.end()};
  }
  if (time >= t.back()) {
    auto v = at(knots() - 1);
    return {v.begin(), v.end()};
  }
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
  const double f = (time - t[k]) / (t[k + 1] - t[k]);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = f == 0.0 ? at(k)[i] : at(k)[i] + f * (at(k + 1)[i] - at(k)[i]);
  return out;
}

double AbstractOrbit::inner(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += weights[i] * a[i] * b[i];
  return s;
}

double AbstractOrbit::norm(std::span<const double> a) const { return std::sqrt(inner(a, a)); }

double AbstractOrbit::l0() const {
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = e_plus[i] - e_minus[i];
  return norm(diff);
}

std::vector<double> AbstractOrbit::direction() const {
  const double l = l0();
  std::vector<double> n(d);
  for (std::size_t i = 0; i < d; ++i) n[i] = (e_plus[i] - e_minus[i]) / l;
  return n;
}

void validate(const AbstractOrbit& V) {
  if (V.t.size() < 2) throw std::invalid_argument("AbstractOrbit: need at least two knots");
  for (std::size_t k = 0; k + 1 < V.t.size(); ++k)
    if (!(V.t[k] < V.t[k + 1])) throw std::invalid_argument("AbstractOrbit: knots must increase");
  if (V.values.size() != V.t.size() * V.d || V.weights.size() != V.d || V.e_minus.size() != V.d ||
      V.e_plus.size() != V.d)
    throw std::invalid_argument("AbstractOrbit: inconsistent sizes");
  for (double w : V.weights)
    if (!(w > 0.0)) throw std::invalid_argument("AbstractOrbit: weights must be positive");
  if (!(V.l0() > 0.0)) throw std::invalid_argument("AbstractOrbit: endpoints coincide");
}

Membership class_membership(const AbstractOrbit& V) {
  validate(V);
  const double l0 = V.l0();
  const auto n = V.direction();
  std::vector<double> proj(V.knots()), diff(V.d);
  for (std::size_t k = 0; k < V.knots(); ++k) {
    for (std::size_t i = 0; i < V.d; ++i) diff[i] = V.at(k)[i] - V.e_minus[i];
    proj[k] = V.inner(diff, n);
  }
  const double hi = 0.75 * l0, lo = 0.25 * l0;
  Membership out;
  out.member = proj.front() <= hi && proj.back() >= lo;
  if (!out.member) return out;

  auto crossing = [&](std::size_t k, double level) {
    return V.t[k] + (V.t[k + 1] - V.t[k]) * (level - proj[k]) / (proj[k + 1] - proj[k]);
  };
  out.t_minus = V.t.back();
  for (std::size_t k = 0; k + 1 < V.knots(); ++k)
    if (proj[k + 1] > hi) {
      out.t_minus = crossing(k, hi);
      break;
    }
  out.t_plus = V.t.front();
  for (std::size_t k = V.knots() - 1; k-- > 0;)
    if (proj[k] < lo) {
      out.t_plus = crossing(k, lo);
      break;
    }
  return out;
}

namespace {

AbstractOrbit make_orbit(std::span<const double> em, std::span<const double> ep, std::vector<double> times,
                         std::vector<double> weights, double t_end, double speed_scale) {
  AbstractOrbit V;
  V.d = em.size();
  if (ep.size() != V.d) throw std::invalid_argument("orbit: endpoint dimensions differ");
  V.e_minus.assign(em.begin(), em.end());
  V.e_plus.assign(ep.begin(), ep.end());
  V.weights = weights.empty() ? std::vector<double>(V.d, 1.0) : std::move(weights);
  if (V.weights.size() != V.d) throw std::invalid_argument("orbit: weight dimension differs");
  if (!(V.l0() > 0.0)) throw std::invalid_argument("orbit: endpoints coincide");
  times.push_back(0.0);
  times.push_back(t_end);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  V.t = std::move(times);
  const auto n = V.direction();
  for (double s : V.t) {
    for (std::size_t i = 0; i < V.d; ++i) {
      double v;
      if (s <= 0.0) v = em[i];
      else if (s >= t_end) v = ep[i];
      else v = em[i] + speed_scale * s * n[i];
      V.values.push_back(v);
    }
  }
  validate(V);
  return V;
}

}  // namespace

AbstractOrbit nonsmooth_orbit(std::span<const double> e_minus, std::span<const double> e_plus,
                              std::vector<double> times, std::vector<double> weights) {
  AbstractOrbit probe;
  probe.d = e_minus.size();
  probe.e_minus.assign(e_minus.begin(), e_minus.end());
  probe.e_plus.assign(e_plus.begin(), e_plus.end());
  probe.weights = weights.empty() ? std::vector<double>(probe.d, 1.0) : weights;
  const double l0 = probe.l0();
  if (!(l0 > 0.0)) throw std::invalid_argument("nonsmooth_orbit: endpoints coincide");
  return make_orbit(e_minus, e_plus, std::move(times), std::move(weights), l0 / std::numbers::sqrt2,
                    std::numbers::sqrt2);
}

AbstractOrbit segment_orbit(std::span<const double> e_minus, std::span<const double> e_plus,
                            std::vector<double> times, std::vector<double> weights) {
  AbstractOrbit probe;
  probe.d = e_minus.size();
  probe.e_minus.assign(e_minus.begin(), e_minus.end());
  probe.e_plus.assign(e_plus.begin(), e_plus.end());
  probe.weights = weights.empty() ? std::vector<double>(probe.d, 1.0) : weights;
  const double l0 = probe.l0();
  if (!(l0 > 0.0)) throw std::invalid_argument("segment_orbit: endpoints coincide");
  return make_orbit(e_minus, e_plus, std::move(times), std::move(weights), 1.0, l0);
}

AbstractOrbit insert_knot(const AbstractOrbit& V, double s) {
  if (std::binary_search(V.t.begin(), V.t.end(), s)) return V;
  AbstractOrbit out = V;
  const auto it = std::upper_bound(V.t.begin(), V.t.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - V.t.begin());
  const auto v = V.sample(s);
  out.t.insert(out.t.begin() + static_cast<std::ptrdiff_t>(k), s);
  out.values.insert(out.values.begin() + static_cast<std::ptrdiff_t>(k * V.d), v.begin(), v.end());
  return out;
}

AbstractOrbit reparameterize(const AbstractOrbit& V, double a, double b, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("reparameterize: kappa must be positive");
  if (!(a < b) || a < V.t.front() || b > V.t.back())
    throw std::invalid_argument("reparameterize: need t_first <= a < b <= t_last");
  AbstractOrbit out = insert_knot(insert_knot(V, a), b);
  for (double& s : out.t) {
    if (s <= a) continue;
    s = s <= b ? a + kappa * (s - a) : s + (kappa - 1.0) * (b - a);
  }
  return out;
}

namespace {

// Gauss-Legendre nodes/weights on [0, 1].
void gauss_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  static const double x1[] = {0.0};
  static const double w1[] = {2.0};
  static const double x2[] = {-0.5773502691896257, 0.5773502691896257};
  static const double w2[] = {1.0, 1.0};
  static const double x3[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w3[] = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
  static const double x4[] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double w4[] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  static const double x5[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  static const double w5[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  const double* xs[] = {x1, x2, x3, x4, x5};
  const double* ws[] = {w1, w2, w3, w4, w5};
  if (n < 1 || n > 5) throw std::invalid_argument("Gauss-Legendre: 1..5 points");
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (xs[n - 1][i] + 1.0);
    w[i] = 0.5 * ws[n - 1][i];
  }
}

}  // namespace

OrbitAction orbit_action(const AbstractOrbit& V, const OrbitPotential& W, double lo, double hi) {
  OrbitAction act;
  std::vector<double> diff(V.d), gx, gw, pt(V.d);
  if (W.rule == OrbitPotential::Rule::GaussLegendre) gauss_rule(W.gauss_points, gx, gw);
  if (W.rule != OrbitPotential::Rule::Characteristic && !W.W)
    throw std::invalid_argument("orbit_action: quadrature rule needs a potential");
  auto is_endpoint = [&](std::span<const double> v) {
    return std::equal(v.begin(), v.end(), V.e_minus.begin()) || std::equal(v.begin(), v.end(), V.e_plus.begin());
  };
  for (std::size_t k = 0; k + 1 < V.knots(); ++k) {
    if (V.t[k] < lo || V.t[k + 1] > hi) continue;
    const double dt = V.t[k + 1] - V.t[k];
    auto a = V.at(k);
    auto b = V.at(k + 1);
    for (std::size_t i = 0; i < V.d; ++i) diff[i] = b[i] - a[i];
    act.kinetic += 0.5 * V.inner(diff, diff) / dt;
    switch (W.rule) {
      case OrbitPotential::Rule::Characteristic: {
        // A segment is either constant at an endpoint, or meets {e-, e+} in at most two points.
        const bool constant = std::equal(a.begin(), a.end(), b.begin());
        act.potential += constant && is_endpoint(a) ? 0.0 : dt;
        break;
      }
      case OrbitPotential::Rule::Trapezoid:
        act.potential += 0.5 * dt * (W.W(a) + W.W(b));
        break;
      case OrbitPotential::Rule::GaussLegendre:
        for (std::size_t q = 0; q < gx.size(); ++q) {
          for (std::size_t i = 0; i < V.d; ++i) pt[i] = a[i] + gx[q] * diff[i];
          act.potential += dt * gw[q] * W.W(pt);
        }
        break;
    }
  }
  return act;
}

std::vector<double> segment_speeds(const AbstractOrbit& V) {
  std::vector<double> out, diff(V.d);
  for (std::size_t k = 0; k + 1 < V.knots(); ++k) {
    for (std::size_t i = 0; i < V.d; ++i) diff[i] = V.at(k + 1)[i] - V.at(k)[i];
    out.push_back(V.norm(diff) / (V.t[k + 1] - V.t[k]));
  }
  return out;
}

AbstractOrbit orbit_from_field(const Field2D& u) {
  AbstractOrbit V;
  const std::size_t nt = u.grid.rows(), nx = u.grid.cols(), m = static_cast<std::size_t>(u.m);
  V.d = nx * m;
  for (std::size_t i = 0; i < nt; ++i) V.t.push_back(u.grid.t.node(i));
  V.values = u.values;
  V.weights.resize(V.d);
  for (std::size_t j = 0; j < nx; ++j)
    for (std::size_t k = 0; k < m; ++k) V.weights[j * m + k] = u.grid.x.weight(j);
  auto first = u.row(0), last = u.row(nt - 1);
  V.e_minus.assign(first.begin(), first.end());
  V.e_plus.assign(last.begin(), last.end());
  validate(V);
  return V;
}

}  // namespace hetlayer
