#pragma once

#include <cstddef>

#include "hetlayer/heteroclinic.hpp"

namespace hetlayer {

/// The fixed reference curve for the affine space of connecting curves: the
/// segment profile (a- for x <= -1, linear on [-1, 1], a+ for x >= 1).
inline Path1D baseline_profile(const Potential& p, const Grid1D& grid) { return segment_profile(p, grid); }

/// J(u) - J_min on the grid of `jmin`, without clamping.
double effective_potential_raw(const Potential& p, const Path1D& u, const JMin& jmin);

/// J(u) - J_min; values in [-tol, 0) are clamped to 0, anything lower throws
/// ConsistencyError (the supplied level was not minimal). A path on another
/// grid than `jmin`, or not ending at the wells, is an invalid argument.
double effective_potential(const Potential& p, const Path1D& u, const JMin& jmin, double tol = 1e-6);

/// Trapezoid quadrature of
///   1/2 |u' - e'|^2 + W(u) - W(e) - grad W(e).(u - e)
/// (cellwise derivatives). Equals J(u) - J(e) - DJ(e)(u - e).
double effective_potential_expanded(const Potential& p, const Path1D& u, const Path1D& e);

/// Directional derivative  int u'.h' + grad W(u).h  of the action; h must
/// vanish at both ends.
double frechet_apply(const Potential& p, const Path1D& u, const Path1D& h);

struct SetDistance {
  double distance = 0.0;
  std::size_t member = 0;
  double tau = 0.0;  // u is closest to member(. - tau)
};

/// min over members e and |tau| <= L/2 of |u - e(. - tau)| in `metric`.
SetDistance dist_to_F(const Potential& p, const Path1D& u, const HeteroclinicSet& F, Metric metric);

}  // namespace hetlayer
