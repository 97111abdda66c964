#include "hetlayer/preconditioner.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hetlayer {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> dirichlet_eigenvalues(std::size_t n_interior, double h) {
  std::vector<double> lam(n_interior);
  for (std::size_t p = 0; p < n_interior; ++p) {
    const double s =
        std::sin(std::numbers::pi * static_cast<double>(p + 1) / (2.0 * static_cast<double>(n_interior + 1)));
    lam[p] = 4.0 * s * s / (h * h);
  }
  return lam;
}

}  // namespace

TridiagonalPreconditioner::TridiagonalPreconditioner(Grid1D grid, int m, double shift)
    : grid_(grid), m_(m), shift_(shift) {
  if (!(shift > 0.0)) throw std::invalid_argument("TridiagonalPreconditioner: shift must be positive");
}

void TridiagonalPreconditioner::apply(std::span<const double> g, std::span<double> out) const {
  const std::size_t n = grid_.size();
  const double h = grid_.spacing();
  const std::size_t ni = n - 2;
  const double off = -1.0 / (h * h);
  const double diag = 2.0 / (h * h) + shift_;
  std::vector<double> c(ni), d(ni);
  for (int k = 0; k < m_; ++k) {
    // Thomas algorithm on interior nodes 1..n-2.
    double denom = diag;
    c[0] = off / denom;
    d[0] = g[1 * m_ + k] / h / denom;
    for (std::size_t i = 1; i < ni; ++i) {
      denom = diag - off * c[i - 1];
      c[i] = off / denom;
      d[i] = (g[(i + 1) * m_ + k] / h - off * d[i - 1]) / denom;
    }
    for (std::size_t i = ni - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    out[k] = 0.0;
    out[(n - 1) * m_ + k] = 0.0;
    for (std::size_t i = 0; i < ni; ++i) out[(i + 1) * m_ + k] = d[i];
  }
}

struct SpectralPreconditioner::Impl {
  explicit Impl(Grid2D g) : grid(g) {}
  Grid2D grid;
  int m;
  std::size_t nt, nx;  // interior sizes
  double* buf = nullptr;
  fftw_plan plan = nullptr;
  std::vector<double> inv_symbol;  // includes transform normalisation and cell weight
};

SpectralPreconditioner::SpectralPreconditioner(Grid2D grid, int m, double shift, bool mixed)
    : impl_(std::make_unique<Impl>(grid)) {
  if (!(shift > 0.0)) throw std::invalid_argument("SpectralPreconditioner: shift must be positive");
  Impl& s = *impl_;
  s.m = m;
  s.nt = grid.rows() - 2;
  s.nx = grid.cols() - 2;
  if (s.nt == 0 || s.nx == 0) throw std::invalid_argument("SpectralPreconditioner: grid too small");
  const auto lt = dirichlet_eigenvalues(s.nt, grid.ht());
  const auto lx = dirichlet_eigenvalues(s.nx, grid.hx());
  const double norm = 4.0 * static_cast<double>(s.nt + 1) * static_cast<double>(s.nx + 1);
  const double cell = grid.ht() * grid.hx();
  s.inv_symbol.resize(s.nt * s.nx);
  for (std::size_t p = 0; p < s.nt; ++p)
    for (std::size_t q = 0; q < s.nx; ++q) {
      double sym = lt[p] + lx[q] + shift;
      if (mixed) sym += lt[p] * lx[q];
      s.inv_symbol[p * s.nx + q] = 1.0 / (sym * norm * cell);
    }
  std::lock_guard<std::mutex> lock(planner_mutex());
  s.buf = static_cast<double*>(fftw_malloc(sizeof(double) * s.nt * s.nx));
  s.plan = fftw_plan_r2r_2d(static_cast<int>(s.nt), static_cast<int>(s.nx), s.buf, s.buf,
                            FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  if (!s.plan) throw std::runtime_error("SpectralPreconditioner: FFTW planning failed");
}

SpectralPreconditioner::~SpectralPreconditioner() {
  if (!impl_) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (impl_->plan) fftw_destroy_plan(impl_->plan);
  if (impl_->buf) fftw_free(impl_->buf);
}

void SpectralPreconditioner::apply(std::span<const double> g, std::span<double> out) {
  Impl& s = *impl_;
  const std::size_t cols = s.grid.cols();
  const std::size_t m = static_cast<std::size_t>(s.m);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < s.nt; ++i)
      for (std::size_t j = 0; j < s.nx; ++j) s.buf[i * s.nx + j] = g[((i + 1) * cols + j + 1) * m + k];
    fftw_execute(s.plan);
    for (std::size_t idx = 0; idx < s.nt * s.nx; ++idx) s.buf[idx] *= s.inv_symbol[idx];
    fftw_execute(s.plan);
    for (std::size_t i = 0; i < s.nt; ++i)
      for (std::size_t j = 0; j < s.nx; ++j) out[((i + 1) * cols + j + 1) * m + k] = s.buf[i * s.nx + j];
  }
}

}  // namespace hetlayer
