#include "hetlayer/effective.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hetlayer/errors.hpp"

namespace hetlayer {

namespace {

void require_same_grid(const Path1D& a, const Path1D& b, const char* what) {
  if (a.grid != b.grid || a.m != b.m) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

void require_wells(const Potential& p, const Path1D& u, const char* what) {
  const auto& am = p.well_minus();
  const auto& ap = p.well_plus();
  for (int k = 0; k < u.m; ++k)
    if (std::fabs(u.at(0)[k] - am[k]) > 1e-10 || std::fabs(u.at(u.size() - 1)[k] - ap[k]) > 1e-10)
      throw std::invalid_argument(std::string(what) + ": path must end at the wells");
}

}  // namespace

double effective_potential_raw(const Potential& p, const Path1D& u, const JMin& jmin) {
  if (u.grid != jmin.grid)
    throw std::invalid_argument("effective_potential: J_min was computed on a different grid");
  if (u.m != p.dim()) throw std::invalid_argument("effective_potential: dimension mismatch");
  require_wells(p, u, "effective_potential");
  return discrete_action(p, u) - jmin.value;
}

double effective_potential(const Potential& p, const Path1D& u, const JMin& jmin, double tol) {
  const double w = effective_potential_raw(p, u, jmin);
  if (w >= 0.0) return w;
  if (w >= -tol) return 0.0;
  std::ostringstream msg;
  msg << "effective potential " << w << " below -" << tol << ": J_min is not minimal on this grid";
  throw ConsistencyError(msg.str());
}

double effective_potential_expanded(const Potential& p, const Path1D& u, const Path1D& e) {
  require_same_grid(u, e, "effective_potential_expanded");
  const int m = u.m;
  const double h = u.grid.spacing();
  std::vector<double> ge(m);
  double kin = 0.0, pot = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    auto uj = u.at(j);
    auto ej = e.at(j);
    p.gradient_unchecked(ej, ge);
    double lin = 0.0;
    for (int k = 0; k < m; ++k) lin += ge[k] * (uj[k] - ej[k]);
    pot += u.grid.weight(j) * (p.eval_unchecked(uj) - p.eval_unchecked(ej) - lin);
    if (j + 1 < u.size()) {
      double d2 = 0.0;
      for (int k = 0; k < m; ++k) {
        const double d = (u.at(j + 1)[k] - uj[k]) - (e.at(j + 1)[k] - ej[k]);
        d2 += d * d;
      }
      kin += d2;
    }
  }
  return 0.5 * kin / h + pot;
}

double frechet_apply(const Potential& p, const Path1D& u, const Path1D& dir) {
  require_same_grid(u, dir, "frechet_apply");
  const int m = u.m;
  for (int k = 0; k < m; ++k)
    if (dir.at(0)[k] != 0.0 || dir.at(dir.size() - 1)[k] != 0.0)
      throw std::invalid_argument("frechet_apply: direction must vanish at the ends");
  const double h = u.grid.spacing();
  std::vector<double> g(m);
  double kin = 0.0, pot = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    p.gradient_unchecked(u.at(j), g);
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += g[k] * dir.at(j)[k];
    pot += u.grid.weight(j) * s;
    if (j + 1 < u.size())
      for (int k = 0; k < m; ++k)
        kin += (u.at(j + 1)[k] - u.at(j)[k]) * (dir.at(j + 1)[k] - dir.at(j)[k]);
  }
  return kin / h + pot;
}

SetDistance dist_to_F(const Potential& p, const Path1D& u, const HeteroclinicSet& F, Metric metric) {
  if (F.members.empty()) throw std::invalid_argument("dist_to_F: empty heteroclinic set");
  SetDistance best{std::numeric_limits<double>::infinity(), 0, 0.0};
  for (std::size_t i = 0; i < F.members.size(); ++i) {
    const auto match = best_translation(u, F.members[i].path, p.well_minus(), p.well_plus(), metric);
    if (match.distance < best.distance) best = {match.distance, i, match.tau};
  }
  return best;
}

}  // namespace hetlayer
