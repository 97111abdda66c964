#pragma once

#include <memory>
#include <span>

#include "hetlayer/grid.hpp"

namespace hetlayer {

/// Exact inverse of the quadratic part of the discrete 1D action on interior
/// nodes, shifted by sigma:  (h (L + sigma))^{-1}  with L the Dirichlet second
/// difference. Boundary entries map to zero.
class TridiagonalPreconditioner {
 public:
  TridiagonalPreconditioner(Grid1D grid, int m, double shift);
  void apply(std::span<const double> g, std::span<double> out) const;

 private:
  Grid1D grid_;
  int m_;
  double shift_;
};

/// Exact inverse of  h_t h_x (L_t (x) I + I (x) L_x + mixed L_t (x) L_x + sigma)
/// on the interior of a Grid2D, applied per component through a 2D sine
/// transform (DST-I). `mixed` selects the fourth-order cross term.
///
/// Not thread-safe: owns scratch buffers. Plans use FFTW_ESTIMATE so the
/// transform is the same on every run.
class SpectralPreconditioner {
 public:
  SpectralPreconditioner(Grid2D grid, int m, double shift, bool mixed);
  ~SpectralPreconditioner();
  SpectralPreconditioner(const SpectralPreconditioner&) = delete;
  SpectralPreconditioner& operator=(const SpectralPreconditioner&) = delete;

  void apply(std::span<const double> g, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hetlayer
