#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hetlayer/field.hpp"

namespace hetlayer {

/// Piecewise-linear curve t -> R^d through knots (t_k, V_k), constant beyond
/// the first and last knot. R^d carries the weighted inner product
/// <a, b> = sum_i w_i a_i b_i (all ones by default), which makes a sampled
/// L2 space of curves look like the abstract Hilbert space.
struct AbstractOrbit {
  std::vector<double> t;
  std::size_t d = 0;
  std::vector<double> values;  // knot-major
  std::vector<double> weights;
  std::vector<double> e_minus, e_plus;

  std::size_t knots() const { return t.size(); }
  std::span<const double> at(std::size_t k) const { return {values.data() + k * d, d}; }
  std::vector<double> sample(double time) const;

  double inner(std::span<const double> a, std::span<const double> b) const;
  double norm(std::span<const double> a) const;
  /// l0 = |e+ - e-| and n = (e+ - e-)/l0.
  double l0() const;
  std::vector<double> direction() const;
};

/// Checks knots, sizes and weights; throws std::invalid_argument.
void validate(const AbstractOrbit& V);

struct Membership {
  bool member = false;
  /// Largest t with <V(s) - e-, n> <= 3 l0/4 for all s <= t, and smallest t
  /// with <V(s) - e-, n> >= l0/4 for all s >= t (interpolated crossings).
  /// Either may lie on the other side of the other one.
  double t_minus = 0.0, t_plus = 0.0;
};

/// Membership needs the projection to start at or below 3 l0/4 and end at or
/// above l0/4 within the knot range.
Membership class_membership(const AbstractOrbit& V);

/// e- until t = 0, then e- + sqrt2 t n until t = l0/sqrt2, then e+. The
/// breakpoints are added to `times`.
AbstractOrbit nonsmooth_orbit(std::span<const double> e_minus, std::span<const double> e_plus,
                              std::vector<double> times, std::vector<double> weights = {});

/// e- until t = 0, linear to e+ at t = 1, then e+.
AbstractOrbit segment_orbit(std::span<const double> e_minus, std::span<const double> e_plus,
                            std::vector<double> times, std::vector<double> weights = {});

/// V unchanged before a, run at speed 1/kappa on [a, b] (now [a, a + kappa (b-a)]),
/// and shifted by (kappa - 1)(b - a) after. Exact on the knots.
AbstractOrbit reparameterize(const AbstractOrbit& V, double a, double b, double kappa);

/// V with a knot at s (no-op if present).
AbstractOrbit insert_knot(const AbstractOrbit& V, double s);

/// How the potential part of the action is integrated along each segment.
struct OrbitPotential {
  enum class Rule { Characteristic, Trapezoid, GaussLegendre };
  Rule rule = Rule::Characteristic;
  /// Needed for Trapezoid / GaussLegendre.
  std::function<double(std::span<const double>)> W;
  int gauss_points = 3;  // 1..5

  /// 1 off {e-, e+}, 0 on them: its segment integral is exact.
  static OrbitPotential characteristic() { return {}; }
};

struct OrbitAction {
  double kinetic = 0.0;    // int 1/2 |V'|^2
  double potential = 0.0;  // int W(V)
  double total() const { return kinetic + potential; }
};

/// Action over the knots inside [lo, hi] (both must be knots, or +-inf).
OrbitAction orbit_action(const AbstractOrbit& V, const OrbitPotential& W, double lo = -1e300, double hi = 1e300);

/// |V_{k+1} - V_k| / (t_{k+1} - t_k) for each segment.
std::vector<double> segment_speeds(const AbstractOrbit& V);

/// Rows of u as an orbit in R^{n_x m} with trapezoid x-weights.
AbstractOrbit orbit_from_field(const Field2D& u);

}  // namespace hetlayer
