#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetlayer/grid.hpp"
#include "hetlayer/potential.hpp"

namespace hetlayer {

/// Discrete curve R -> R^m sampled on a Grid1D; node j occupies
/// values[j*m .. j*m+m).
struct Path1D {
  Grid1D grid;
  int m;
  std::vector<double> values;
  bool clamped = true;  // v_0 = a-, v_{n-1} = a+ held fixed

  Path1D(Grid1D g, int dim) : grid(g), m(dim), values(g.size() * static_cast<std::size_t>(dim), 0.0) {}
  Path1D(Grid1D g, int dim, std::vector<double> v, bool clamp = true);

  std::size_t size() const { return grid.size(); }
  std::span<double> at(std::size_t j) { return {values.data() + j * m, static_cast<std::size_t>(m)}; }
  std::span<const double> at(std::size_t j) const {
    return {values.data() + j * m, static_cast<std::size_t>(m)};
  }
};

/// Log-linear fit  log d(x) = log K - k |x|  on one tail window.
struct DecayFit {
  bool degenerate = true;  // tail below 1e-13 somewhere in the window
  double k = 0.0;
  double K = 0.0;
  double residual = 0.0;  // rms of the log-residuals
  double window_lo = 0.0, window_hi = 0.0;
};

struct TailFits {
  DecayFit left;   // towards a-
  DecayFit right;  // towards a+
};

/// Least-squares fit of log(d) against s for samples with d decaying in s
/// (s is the distance into the tail). Degenerate if any d <= floor.
DecayFit fit_exponential(std::span<const double> s, std::span<const double> d, double floor = 1e-13);

struct Heteroclinic {
  Path1D path;
  double action = 0.0;
  TailFits decay{};
  double first_integral = 0.0;
  double gradient_sup = 0.0;  // discrete ODE residual, translation direction excluded
  int iterations = 0;
  char label = '+';
  std::size_t start_index = 0;
};

/// Minimal action level together with the grid it was computed on. Effective
/// potentials refuse to combine it with paths on any other grid.
struct JMin {
  double value;
  Grid1D grid;
};

enum class Metric { L2, H1 };

struct HeteroclinicSet {
  std::vector<Heteroclinic> members{};  // sorted by start index
  std::vector<Heteroclinic> discarded{};// converged, but above J_min + tol
  JMin j_min;
  std::optional<double> d_min{};   // L2, only when both labels populated
  std::optional<double> d_min_h1{};// H1
  std::size_t rep_minus = 0, rep_plus = 0;  // indices realizing d_min
  std::size_t rep_minus_h1 = 0, rep_plus_h1 = 0;

  bool two_labels() const;
  std::vector<const Heteroclinic*> with_label(char label) const;
};

// ------------------------------------------------------------------ action

/// sum_j h [ 1/2 |(v_{j+1}-v_j)/h|^2 + (W(v_j)+W(v_{j+1}))/2 ]
double discrete_action(const Potential& p, const Path1D& v);

/// Gradient of discrete_action w.r.t. node values (zero at clamped ends).
std::vector<double> action_gradient(const Potential& p, const Path1D& v);

/// Action and gradient in one pass on raw node values (free of checks).
double action_and_gradient(const Potential& p, const Grid1D& grid, int m, std::span<const double> v,
                           std::span<double> grad, bool clamped);

/// Baseline profile: a- for x <= -1, linear on [-1, 1], a+ for x >= 1.
Path1D segment_profile(const Potential& p, const Grid1D& grid);

// -------------------------------------------------------------- minimizing

struct HeteroclinicOptions {
  double tolerance = 1e-8;  // on the discrete ODE residual, sup norm
  int max_iterations = 20000;
};

/// Minimizes the discrete action from `init` (clamped to a-/a+) and returns
/// the pinned result. Throws NonConvergenceError on failure.
Heteroclinic minimize_heteroclinic(const Potential& p, const Path1D& init,
                                   const HeteroclinicOptions& opts = {});

/// e(. - tau), linearly interpolated, with a-/a+ beyond the ends.
Path1D translate(const Path1D& e, double tau, std::span<const double> a_minus,
                 std::span<const double> a_plus);

/// Shift so that <e(0) - (a- + a+)/2, n> = 0, n the unit well axis. Uses the
/// sign change closest to x = 0. Throws PinningError when there is none.
Path1D pin_translation(const Path1D& e, std::span<const double> a_minus, std::span<const double> a_plus);

TailFits fit_decay(const Path1D& e, std::span<const double> a_minus, std::span<const double> a_plus);

/// sup over interior nodes of | 1/2 |e'|^2 - W(e) |, central differences.
double first_integral_residual(const Potential& p, const Path1D& e);

// ----------------------------------------------------------------- the set

struct MultistartSpec {
  std::vector<Path1D> starts;  // empty: default starts
  HeteroclinicOptions solver;
  double dedup_tolerance = 1e-3;  // L2, after pinning
  double action_tolerance = 1e-6;
  bool require_two_labels = false;
  int jobs = 1;
  /// Labels a member '+' or '-'. Default: sign of the largest-magnitude u2
  /// for u2-symmetric potentials (zero counts as '+'), '+' otherwise.
  std::function<char(const Potential&, const Path1D&)> labeler;
};

/// Segment profile, plus segments bent by +-cos^2 bumps in u2 for symmetric
/// potentials with m = 2.
std::vector<Path1D> default_starts(const Potential& p, const Grid1D& grid);

char default_label(const Potential& p, const Path1D& e);

HeteroclinicSet build_heteroclinic_set(const Potential& p, const Grid1D& grid,
                                       const MultistartSpec& spec = {});

// --------------------------------------------------------------- distances

/// Norm of a - b on the grid (trapezoid for L2, cellwise derivative for H1).
double path_distance(const Path1D& a, const Path1D& b, Metric metric);
double path_norm(std::span<const double> diff, const Grid1D& grid, int m, Metric metric);

struct TranslationMatch {
  double distance = 0.0;
  double tau = 0.0;
};

/// min over tau in [-L/2, L/2] of |u - e(. - tau)|: coarse scan at step 10h,
/// then golden section to 1e-6 around the best coarse point.
TranslationMatch best_translation(const Path1D& u, const Path1D& e, std::span<const double> a_minus,
                                  std::span<const double> a_plus, Metric metric);

}  // namespace hetlayer
