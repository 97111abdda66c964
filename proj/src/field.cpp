#include "hetlayer/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hetlayer {

Path1D Field2D::row_path(std::size_t i) const {
  auto r = row(i);
  return Path1D(grid.x, m, std::vector<double>(r.begin(), r.end()), true);
}

Field2D constant_field(const Grid2D& grid, std::span<const double> value) {
  Field2D u(grid, static_cast<int>(value.size()));
  for (std::size_t i = 0; i < grid.rows(); ++i)
    for (std::size_t j = 0; j < grid.cols(); ++j) std::copy(value.begin(), value.end(), u.at(i, j).begin());
  return u;
}

Field2D separable_field(const Grid1D& t_grid, const Path1D& e) {
  Field2D u(Grid2D{t_grid, e.grid}, e.m);
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    std::copy(e.values.begin(), e.values.end(), u.values.begin() + static_cast<std::ptrdiff_t>(u.index(i, 0)));
  return u;
}

Field2D smoothstep_initializer(const Grid1D& t_grid, const Path1D& e_minus, const Path1D& e_plus) {
  if (e_minus.grid != e_plus.grid || e_minus.m != e_plus.m)
    throw std::invalid_argument("smoothstep_initializer: boundary curves on different grids");
  Field2D u(Grid2D{t_grid, e_minus.grid}, e_minus.m);
  const std::size_t nt = t_grid.size();
  for (std::size_t i = 0; i < nt; ++i) {
    const double tau = std::clamp((t_grid.node(i) + 2.0) / 4.0, 0.0, 1.0);
    double s = tau * tau * (3.0 - 2.0 * tau);
    if (i == 0) s = 0.0;
    if (i + 1 == nt) s = 1.0;
    for (std::size_t j = 0; j < e_minus.size(); ++j)
      for (int k = 0; k < u.m; ++k) {
        const double a = e_minus.at(j)[k], b = e_plus.at(j)[k];
        u.at(i, j)[k] = s == 0.0 ? a : (s == 1.0 ? b : (1.0 - s) * a + s * b);
      }
  }
  return u;
}

double max_abs_difference(const Field2D& a, const Field2D& b) {
  if (!(a.grid == b.grid) || a.m != b.m) throw std::invalid_argument("max_abs_difference: grid mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::fabs(a.values[i] - b.values[i]));
  return d;
}

}  // namespace hetlayer
