#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetlayer/field.hpp"
#include "hetlayer/heteroclinic.hpp"
#include "hetlayer/optimizer.hpp"

namespace hetlayer {

/// Which strip energy: 2 is  1/2|grad u|^2 + W,  4 adds  1/2|u_tx|^2.
enum class Order { Second = 2, Fourth = 4 };

// ------------------------------------------------------------ energy core

/// Strip energy and (optionally) its gradient with respect to node values,
/// zero on the clamped boundary. Rows are evaluated independently and summed
/// in a fixed mirror-paired order, so the value does not depend on `jobs`
/// and is unchanged by reversing t.
double layer_energy(const Potential& p, const Grid2D& grid, int m, std::span<const double> u,
                    std::span<double> grad, Order order, int jobs = 1);

/// Energy of the cells in [i0, i1) x [j0, j1) (cell (i, j) has lower-left
/// node (i, j)), each by the four-corner cell rule.
double patch_energy(const Potential& p, const Field2D& u, std::size_t i0, std::size_t i1, std::size_t j0,
                    std::size_t j1, Order order);

double energy2d(const Potential& p, const Field2D& u, int jobs = 1);

/// sum_i h_t 1/2 |(U_{i+1} - U_i)/h_t|^2  +  sum_i w_i (J(U_i) - J_min), with the
/// t-trapezoid weights w_i and the raw (unclamped) effective potential.
double renormalized_action(const Potential& p, const Field2D& u, const JMin& jmin);

/// Radial projection of every value onto |v| <= rho.
Field2D ball_project(const Potential& p, const Field2D& u);

struct Residual {
  double sup = 0.0;
  Field2D field;
};

/// 5-point Laplacian minus grad W at interior nodes (zero elsewhere).
Residual pde_residual(const Potential& p, const Field2D& u);

// ---------------------------------------------------------- equipartition

struct EquipartitionRow {
  double t = 0.0;
  double lhs = 0.0;  // kinetic: 1/2 int |u_t|^2 (+ |u_tx|^2)
  double rhs = 0.0;  // int 1/2 |u_x|^2 + W  -  J_min
  double diff = 0.0;
  double rel = 0.0;  // |lhs - rhs| / (|lhs| + |rhs| + eps)
};

std::vector<EquipartitionRow> equipartition_rows(const Potential& p, const Field2D& u, const JMin& jmin,
                                                 Order order, double eps = 1e-12);
inline std::vector<EquipartitionRow> equipartition_profile(const Potential& p, const Field2D& u,
                                                           const JMin& jmin) {
  return equipartition_rows(p, u, jmin, Order::Second);
}

/// Largest relative residual over rows with |t| <= window.
double max_equipartition(const std::vector<EquipartitionRow>& rows, double window);

// --------------------------------------------------------------- probes

/// Tensor cos^2 bump  amp * dir * c(t) c(x), supported on |t-ct| < wt, |x-cx| < wx.
struct Bump {
  double ct = 0.0, cx = 0.0;
  double wt = 1.0, wx = 1.0;  // half widths
  double amplitude = 0.0;
  std::vector<double> direction;  // unit vector in R^m
};

struct ProbeSpec {
  int count = 100;
  std::uint64_t seed = 1;
  double min_amplitude = 0.01, max_amplitude = 0.2;
  double min_half_width = 0.25, max_half_width = 1.5;
  int margin = 2;            // cells kept free at every boundary
  double tolerance = 1e-8;   // relative: pass iff dE >= -tolerance (1 + E)
};

std::vector<Bump> random_bumps(const Grid2D& grid, int m, const ProbeSpec& spec);
Field2D bump_field(const Grid2D& grid, int m, const Bump& b);

struct ProbeRecord {
  Bump bump;
  double delta = 0.0;
  bool passed = true;
};

struct ProbeLedger {
  std::vector<ProbeRecord> records;
  double threshold = 0.0;  // absolute: tolerance (1 + E)
  double min_delta = 0.0;
  bool all_passed = true;
};

/// E over the cells touching supp(phi), of u + phi minus that of u. A phi
/// that is non-zero within `margin` cells of the boundary is rejected.
double probe_energy_change(const Potential& p, const Field2D& u, const Field2D& phi, Order order,
                           int margin = 2);

ProbeLedger minimality_probe(const Potential& p, const Field2D& u, const ProbeSpec& spec,
                             Order order = Order::Second);

// ------------------------------------------------------------ certificate

struct ClassCertificate {
  Metric metric = Metric::L2;
  double threshold = 0.0;  // d_min / 4 in the metric
  double t_minus = 0.0;    // rows t <= t_minus are within threshold of F-
  double t_plus = 0.0;     // rows t >= t_plus are within threshold of F+
  bool passed = false;     // both hold for |t| >= T/2
  std::vector<double> t, dist_minus, dist_plus;
};

/// Distances of every row to F- and F+ (over members and translations), and
/// the extremal thresholds. Passing needs the bounds on |t| >= T/2.
ClassCertificate class_certificate(const Potential& p, const Field2D& u, const HeteroclinicSet& F, Metric metric);

// ------------------------------------------------------------------ decay

struct LayerDecay {
  DecayFit t_minus, t_plus;  // H1-in-x distance of U(t) to e-/e+
  DecayFit x_minus, x_plus;  // sup over t of |u(t, x) - a-/a+|
  /// sup over all rows of |u(t, x) - a+| at x = L - 1, and the fitted bound there.
  double uniform_sup = 0.0, uniform_bound = 0.0;
  bool all_positive() const;
};

LayerDecay layer_decay_fit(const Potential& p, const Field2D& u, const Path1D& e_minus, const Path1D& e_plus);

// --------------------------------------------------------------- minimize

struct LayerOptions {
  double tolerance = 1e-6;  // on the interior residual (gradient / cell area), sup norm
  int max_iterations = 200000;
  int jobs = 1;
  double shift = 1.0;  // preconditioner shift
  bool keep_history = true;
};

struct LayerSolve {
  Field2D field;
  LbfgsResult stats;
  double energy = 0.0;
  std::size_t member_minus = 0, member_plus = 0;  // representatives in F
};

/// Minimizes the strip energy with rows t = -T, T clamped to e-, e+ and
/// columns x = -L, L clamped to a-, a+. `init` defaults to the smoothstep
/// initializer. Throws NonConvergenceError carrying the last iterate.
LayerSolve minimize_layer_between(const Potential& p, const Path1D& e_minus, const Path1D& e_plus,
                                  const Grid1D& t_grid, const std::optional<Field2D>& init,
                                  const LayerOptions& opts, Order order = Order::Second);

/// As above with the representatives realizing d_min in F. Refuses (throws
/// HypothesisError) unless F splits into two labels, and requires the
/// x-grid to be the grid F was computed on.
LayerSolve minimize_layer(const Potential& p, const HeteroclinicSet& F, const Grid2D& grid,
                          const std::optional<Field2D>& init = std::nullopt, const LayerOptions& opts = {});

}  // namespace hetlayer
