#pragma once

#include <span>
#include <vector>

#include "hetlayer/grid.hpp"
#include "hetlayer/heteroclinic.hpp"

namespace hetlayer {

/// Discrete map [-T,T] x [-L,L] -> R^m, row-major in t: node (i, j) occupies
/// values[(i*cols + j)*m .. +m). Row i is the orbit point U(t_i).
struct Field2D {
  Grid2D grid;
  int m;
  int order = 2;  // energy the field belongs to (2 or 4); a tag for I/O only
  std::vector<double> values;

  Field2D(Grid2D g, int dim) : grid(g), m(dim), values(g.rows() * g.cols() * static_cast<std::size_t>(dim), 0.0) {}

  std::size_t index(std::size_t i, std::size_t j) const { return (i * grid.cols() + j) * static_cast<std::size_t>(m); }
  std::span<double> at(std::size_t i, std::size_t j) { return {values.data() + index(i, j), static_cast<std::size_t>(m)}; }
  std::span<const double> at(std::size_t i, std::size_t j) const {
    return {values.data() + index(i, j), static_cast<std::size_t>(m)};
  }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + index(i, 0), grid.cols() * static_cast<std::size_t>(m)};
  }
  /// Row i as a clamped curve on the x-grid.
  Path1D row_path(std::size_t i) const;
};

Field2D constant_field(const Grid2D& grid, std::span<const double> value);

/// u(t, x) = e(x) for every t.
Field2D separable_field(const Grid1D& t_grid, const Path1D& e);

/// u(t, .) = (1 - s(t)) e- + s(t) e+, s the cubic smoothstep from 0 at t = -2
/// to 1 at t = 2. The rows t = -T and t = T are exactly e- and e+.
Field2D smoothstep_initializer(const Grid1D& t_grid, const Path1D& e_minus, const Path1D& e_plus);

/// Max |a - b| over all entries (grids must agree).
double max_abs_difference(const Field2D& a, const Field2D& b);

}  // namespace hetlayer
