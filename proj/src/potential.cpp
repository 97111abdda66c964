#include "hetlayer/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hetlayer/optimizer.hpp"

namespace hetlayer {

namespace {

void require_finite(std::span<const double> u, int m, const char* what) {
  if (static_cast<int>(u.size()) != m)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace

// ---------------------------------------------------------------- builtins

DecoupledQuartic::DecoupledQuartic(int m) : m_(m) {
  if (m < 2) throw std::invalid_argument("DecoupledQuartic: m must be >= 2");
}

Point DecoupledQuartic::well_minus() const {
  Point a(m_, 0.0);
  a[0] = -1.0;
  return a;
}

Point DecoupledQuartic::well_plus() const {
  Point a(m_, 0.0);
  a[0] = 1.0;
  return a;
}

double DecoupledQuartic::value(std::span<const double> u) const {
  const double s = 1.0 - u[0] * u[0];
  double w = 0.25 * s * s;
  for (int k = 1; k < m_; ++k) w += 0.5 * u[k] * u[k];
  return w;
}

void DecoupledQuartic::gradient(std::span<const double> u, std::span<double> out) const {
  out[0] = -u[0] * (1.0 - u[0] * u[0]);
  for (int k = 1; k < m_; ++k) out[k] = u[k];
}

double DecoupledQuartic::hessian_quadform(std::span<const double> u,
                                          std::span<const double> nu) const {
  double q = (3.0 * u[0] * u[0] - 1.0) * nu[0] * nu[0];
  for (int k = 1; k < m_; ++k) q += nu[k] * nu[k];
  return q;
}

EllipticWell::EllipticWell(double a, double mu) : a_(a), mu_(mu) {
  if (!(a > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("EllipticWell: a and mu must be positive");
}

double EllipticWell::value(std::span<const double> u) const {
  const double s = u[0] * u[0] - 1.0;
  const double g = u[1] * u[1] - a_ * (1.0 - u[0] * u[0]);
  return 0.25 * s * s + 0.5 * g * g + 0.5 * mu_ * u[1] * u[1];
}

void EllipticWell::gradient(std::span<const double> u, std::span<double> out) const {
  const double s = u[0] * u[0] - 1.0;
  const double g = u[1] * u[1] - a_ * (1.0 - u[0] * u[0]);
  out[0] = s * u[0] + 2.0 * a_ * g * u[0];
  out[1] = 2.0 * g * u[1] + mu_ * u[1];
}

double EllipticWell::hessian_quadform(std::span<const double> u,
                                      std::span<const double> nu) const {
  const double g = u[1] * u[1] - a_ * (1.0 - u[0] * u[0]);
  const double h11 = 3.0 * u[0] * u[0] - 1.0 + 4.0 * a_ * a_ * u[0] * u[0] + 2.0 * a_ * g;
  const double h12 = 4.0 * a_ * u[0] * u[1];
  const double h22 = 4.0 * u[1] * u[1] + 2.0 * g + mu_;
  return h11 * nu[0] * nu[0] + 2.0 * h12 * nu[0] * nu[1] + h22 * nu[1] * nu[1];
}

// ---------------------------------------------------------------- descriptor

Potential::Potential(std::shared_ptr<const PotentialModel> model, double r, double c,
                     std::optional<double> rho)
    : model_(std::move(model)), r_(r), c_(c), rho_(rho) {
  if (!model_) throw std::invalid_argument("Potential: null model");
  if (model_->dim() < 2) throw std::invalid_argument("Potential: dimension must be >= 2");
  if (!(r > 0.0)) throw std::invalid_argument("Potential: r must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("Potential: c must be positive");
  if (rho && !(*rho > 0.0)) throw std::invalid_argument("Potential: rho must be positive");
  a_minus_ = model_->well_minus();
  a_plus_ = model_->well_plus();
  if (static_cast<int>(a_minus_.size()) != dim() || static_cast<int>(a_plus_.size()) != dim())
    throw std::invalid_argument("Potential: wells have wrong dimension");
  if (a_minus_ == a_plus_) throw std::invalid_argument("Potential: wells coincide");
}

double Potential::eval(std::span<const double> u) const {
  require_finite(u, dim(), "eval");
  return model_->value(u);
}

Point Potential::gradient(std::span<const double> u) const {
  require_finite(u, dim(), "gradient");
  Point g(dim());
  model_->gradient(u, g);
  return g;
}

double Potential::hessian_quadform(std::span<const double> u, std::span<const double> nu) const {
  require_finite(u, dim(), "hessian_quadform");
  require_finite(nu, dim(), "hessian_quadform");
  double n2 = 0.0;
  for (double v : nu) n2 += v * v;
  if (std::fabs(std::sqrt(n2) - 1.0) > 1e-12)
    throw std::invalid_argument("hessian_quadform: direction must be a unit vector");
  return model_->hessian_quadform(u, nu);
}

double Potential::hessian_scale(std::span<const double> u) const {
  const int m = dim();
  Point nu(m, 0.0);
  double best = 0.0;
  for (int i = 0; i < m; ++i) {
    std::fill(nu.begin(), nu.end(), 0.0);
    nu[i] = 1.0;
    best = std::max(best, std::fabs(model_->hessian_quadform(u, nu)));
    for (int j = i + 1; j < m; ++j) {
      for (double sgn : {1.0, -1.0}) {
        std::fill(nu.begin(), nu.end(), 0.0);
        nu[i] = std::numbers::sqrt2 / 2.0;
        nu[j] = sgn * std::numbers::sqrt2 / 2.0;
        best = std::max(best, std::fabs(model_->hessian_quadform(u, nu)));
      }
    }
  }
  return best;
}

Potential make_decoupled_quartic(int m, std::optional<double> rho) {
  return Potential(std::make_shared<DecoupledQuartic>(m), 0.1, 1.0, rho);
}

Potential make_elliptic_well(double a, double mu, std::optional<double> rho) {
  // Off the well the soft curvature is mu - 4a|u1 - 1| + O(|u - a|^2), so the
  // nondegeneracy ball shrinks with mu/a and c keeps a margin of 5ar below mu.
  const double r = std::min(1e-3, mu / (10.0 * a));
  return Potential(std::make_shared<EllipticWell>(a, mu), r, mu - 5.0 * a * r, rho);
}

// ---------------------------------------------------------------- hypotheses

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Deterministic set of unit vectors: half-circle for m = 2, axes plus seeded
// random directions otherwise.
std::vector<Point> unit_directions(int m, int count, unsigned seed, bool half_circle) {
  std::vector<Point> dirs;
  if (m == 2) {
    const double span = half_circle ? std::numbers::pi : 2.0 * std::numbers::pi;
    for (int k = 0; k < count; ++k) {
      const double th = span * k / count;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
    return dirs;
  }
  for (int i = 0; i < m; ++i) {
    Point e(m, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  while (static_cast<int>(dirs.size()) < count + m) {
    Point v(m);
    double n2 = 0.0;
    for (double& x : v) {
      x = normal(rng);
      n2 += x * x;
    }
    const double n = std::sqrt(n2);
    if (n < 1e-12) continue;
    for (double& x : v) x /= n;
    dirs.push_back(v);
  }
  return dirs;
}

Point refine_minimum(const Potential& p, Point start) {
  LbfgsOptions opts;
  opts.tolerance = 1e-12;
  opts.max_iterations = 500;
  Objective f = [&](std::span<const double> u, std::span<double> g) {
    p.gradient_unchecked(u, g);
    return p.eval_unchecked(u);
  };
  minimize_lbfgs(f, start, opts);
  return start;
}

}  // namespace

HypothesisReport verify_double_well(const Potential& p, const SampleSpec& spec) {
  HypothesisReport rep;
  const int m = p.dim();
  const auto per_axis =
      static_cast<std::size_t>(std::llround(2.0 * spec.box_half_width / spec.box_step)) + 1;
  std::size_t total = 1;
  for (int k = 0; k < m; ++k) total *= per_axis;

  auto coord = [&](std::size_t idx, Point& u) {
    for (int k = 0; k < m; ++k) {
      u[k] = -spec.box_half_width + static_cast<double>(idx % per_axis) * spec.box_step;
      idx /= per_axis;
    }
  };

  std::vector<double> values(total);
  Point u(m);
  double min_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) {
    coord(i, u);
    values[i] = p.eval_unchecked(u);
    min_val = std::min(min_val, values[i]);
  }
  rep.min_sampled_value = min_val;

  // Discrete local minima (<= all 3^m - 1 neighbours), refined by descent.
  std::vector<long> offsets;
  {
    std::size_t n_off = 1;
    for (int k = 0; k < m; ++k) n_off *= 3;
    for (std::size_t o = 0; o < n_off; ++o) {
      long off = 0, stride = 1;
      std::size_t t = o;
      bool zero = true;
      for (int k = 0; k < m; ++k) {
        const long dk = static_cast<long>(t % 3) - 1;
        t /= 3;
        if (dk != 0) zero = false;
        off += dk * stride;
        stride *= static_cast<long>(per_axis);
      }
      if (!zero) offsets.push_back(off);
    }
  }
  const double candidate_level = 0.05;
  constexpr std::size_t kZeroCap = 16;
  for (std::size_t i = 0; i < total && rep.zeros.size() <= kZeroCap; ++i) {
    if (values[i] > candidate_level) continue;
    bool interior = true;
    std::size_t t = i;
    for (int k = 0; k < m; ++k) {
      const std::size_t ck = t % per_axis;
      t /= per_axis;
      if (ck == 0 || ck + 1 == per_axis) interior = false;
    }
    if (!interior) continue;
    bool is_min = true;
    for (long off : offsets) {
      if (values[static_cast<std::size_t>(static_cast<long>(i) + off)] < values[i]) {
        is_min = false;
        break;
      }
    }
    if (!is_min) continue;
    coord(i, u);
    Point z = refine_minimum(p, u);
    if (p.eval_unchecked(z) > spec.zero_tolerance) continue;
    bool fresh = true;
    for (const Point& q : rep.zeros)
      if (distance(q, z) < 1e-4) fresh = false;
    if (fresh) rep.zeros.push_back(z);
  }
  const bool wells_zero =
      p.eval_unchecked(p.well_minus()) == 0.0 && p.eval_unchecked(p.well_plus()) == 0.0;
  bool zeros_at_wells = rep.zeros.size() == 2;
  if (zeros_at_wells) {
    const bool direct = distance(rep.zeros[0], p.well_minus()) < 1e-6 &&
                        distance(rep.zeros[1], p.well_plus()) < 1e-6;
    const bool swapped = distance(rep.zeros[1], p.well_minus()) < 1e-6 &&
                         distance(rep.zeros[0], p.well_plus()) < 1e-6;
    zeros_at_wells = direct || swapped;
  }
  rep.two_zeros = min_val >= 0.0 && wells_zero && zeros_at_wells;

  // Hessian lower bound on the r-balls around both wells.
  const auto nus = unit_directions(m, spec.direction_samples, spec.seed, true);
  const auto ball_dirs = unit_directions(m, 32, spec.seed + 1, false);
  double c_meas = std::numeric_limits<double>::infinity();
  for (const Point* well : {&p.well_minus(), &p.well_plus()}) {
    std::vector<Point> pts{*well};
    const int shells = std::max(1, spec.ball_samples / static_cast<int>(ball_dirs.size()));
    for (int s = 1; s <= shells; ++s) {
      const double rad = p.r() * s / shells;
      for (const Point& d : ball_dirs) {
        Point q = *well;
        for (int k = 0; k < m; ++k) q[k] += rad * d[k];
        pts.push_back(q);
      }
    }
    for (const Point& q : pts)
      for (const Point& nu : nus) c_meas = std::min(c_meas, p.hessian_quadform_unchecked(q, nu));
  }
  rep.measured_c = c_meas;
  rep.hessian_bound = c_meas >= p.c() - 1e-12;

  // Asymptotic condition: positive infimum on the sphere |u| = R.
  const auto sphere = unit_directions(m, spec.sphere_samples, spec.seed + 2, false);
  double inf_s = std::numeric_limits<double>::infinity();
  for (const Point& d : sphere) {
    Point q(m);
    for (int k = 0; k < m; ++k) q[k] = spec.sphere_radius * d[k];
    inf_s = std::min(inf_s, p.eval_unchecked(q));
  }
  rep.sphere_infimum = inf_s;
  rep.asymptotic = inf_s > 0.0;

  if (p.rho()) {
    bool ok = true;
    const double rho = *p.rho();
    for (const Point& d : sphere) {
      Point q(m), sq(m);
      for (int k = 0; k < m; ++k) q[k] = rho * d[k];
      const double w0 = p.eval_unchecked(q);
      for (double s : {1.001, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0}) {
        for (int k = 0; k < m; ++k) sq[k] = s * q[k];
        if (p.eval_unchecked(sq) < w0 - 1e-12 * (1.0 + w0)) ok = false;
      }
    }
    rep.growth = ok;
  }
  return rep;
}

}  // namespace hetlayer
