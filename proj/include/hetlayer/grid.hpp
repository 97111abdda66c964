#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace hetlayer {

/// Uniform grid on [-L, L] with n nodes; x_j = -L + j h, h = 2L/(n-1).
class Grid1D {
 public:
  Grid1D(double half_length, std::size_t n) : half_length_(half_length), n_(n) {
    if (!(half_length > 0.0) || !std::isfinite(half_length))
      throw std::invalid_argument("Grid1D: half length must be positive");
    if (n < 3) throw std::invalid_argument("Grid1D: need at least 3 nodes");
    h_ = 2.0 * half_length / static_cast<double>(n - 1);
  }

  /// Grid with spacing as close as possible to `spacing` (2L/spacing rounded).
  static Grid1D with_spacing(double half_length, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("Grid1D: spacing must be positive");
    const double cells = std::round(2.0 * half_length / spacing);
    return Grid1D(half_length, static_cast<std::size_t>(cells) + 1);
  }

  double half_length() const { return half_length_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }

  // Symmetric about zero: node j and node n-1-j are exact negatives.
  double node(std::size_t j) const {
    const std::size_t mirror = n_ - 1 - j;
    if (j == mirror) return 0.0;
    if (j < mirror) return -half_length_ + static_cast<double>(j) * h_;
    return half_length_ - static_cast<double>(mirror) * h_;
  }

  /// Trapezoid weight of node j.
  double weight(std::size_t j) const { return (j == 0 || j + 1 == n_) ? 0.5 * h_ : h_; }

  bool operator==(const Grid1D& o) const { return half_length_ == o.half_length_ && n_ == o.n_; }
  bool operator!=(const Grid1D& o) const { return !(*this == o); }

 private:
  double half_length_;
  std::size_t n_;
  double h_;
};

/// Tensor grid [-T, T] x [-L, L]; t is the row (slow) index, x the column.
struct Grid2D {
  Grid1D t;
  Grid1D x;

  std::size_t rows() const { return t.size(); }
  std::size_t cols() const { return x.size(); }
  double ht() const { return t.spacing(); }
  double hx() const { return x.spacing(); }

  bool operator==(const Grid2D& o) const { return t == o.t && x == o.x; }
};

}  // namespace hetlayer
