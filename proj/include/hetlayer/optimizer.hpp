#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hetlayer {

/// Objective callback: returns f(x) and writes the gradient into `grad`.
/// Fixed (Dirichlet) coordinates are expressed by a zero gradient entry there;
/// the search direction then never moves them.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Applies an approximate inverse Hessian: out = P^{-1} g. Must be symmetric
/// positive definite and map zero entries (fixed coordinates) to zero.
using Preconditioner = std::function<void(std::span<const double> g, std::span<double> out)>;

struct LbfgsOptions {
  int memory = 12;
  int max_iterations = 20000;
  /// Stop when max_i |g_i| / gradient_scale <= tolerance.
  double tolerance = 1e-8;
  double gradient_scale = 1.0;
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
  int max_backtracks = 40;
  /// Relative level below which differences of f are treated as rounding noise.
  /// Steps in that regime are accepted on the directional derivative alone,
  /// provided f does not rise by more than this fraction of |f|.
  double noise_level = 1e-14;
  Preconditioner preconditioner;  // empty: scaled identity
};

struct LbfgsResult {
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double value = 0.0;
  double gradient_sup = 0.0;  // scaled by gradient_scale
  std::string status;
  /// f at every accepted iterate (index 0 is the start).
  std::vector<double> history;
};

/// Limited-memory BFGS with backtracking line search; `x` holds the start on
/// entry and the last accepted iterate on exit. Never throws on
/// non-convergence: callers inspect `converged`.
LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double>& x, const LbfgsOptions& opts);

double sup_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace hetlayer
