#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hetlayer/layer2d.hpp"

namespace hetlayer {

/// Cell quadrature of 1/2 (|u_tx|^2 + |grad u|^2) + W, with u_tx the cell
/// cross difference (exact mixed derivative of the bilinear interpolant).
double energy4(const Potential& p, const Field2D& u, int jobs = 1);

/// sum_i h_t 1/2 (|(U_{i+1}-U_i)/h_t|^2_{L2} + |(U_{i+1}-U_i)'/h_t|^2_{L2})  +  sum_i w_i (J(U_i) - J_min).
double action4(const Potential& p, const Field2D& u, const JMin& jmin);

/// Refuses single-family sets (HypothesisError); boundary rows are the pair
/// realizing the H1 distance between the two families.
LayerSolve minimize_layer4(const Potential& p, const HeteroclinicSet& F, const Grid2D& grid,
                           const std::optional<Field2D>& init = std::nullopt, const LayerOptions& opts = {});

struct WeakTestSpec {
  int count = 50;
  std::uint64_t seed = 2;
  double min_half_width = 0.5, max_half_width = 2.0;
  double lattice = 2.0;  // spacing of admissible centres
  int margin = 2;
};

/// cos^2 tensor bumps: three random half widths, centres drawn from a coarse
/// lattice that keeps the support `margin` cells inside.
std::vector<Bump> weak_test_functions(const Grid2D& grid, int m, const WeakTestSpec& spec);

/// Discrete  int u_tx.phi_tx + grad u.grad phi + grad W(u).phi  (same
/// quadrature as energy4, so it is the derivative of energy4 along phi).
double weak_form(const Potential& p, const Field2D& u, const Field2D& phi, int margin = 2);

/// Discrete H1 (x) H1 norm: |phi|^2 + |phi_t|^2 + |phi_x|^2 + |phi_tx|^2.
double tensor_h1_norm(const Field2D& phi);

struct WeakResidual {
  double max = 0.0;
  std::vector<double> values;  // per test, normalized
};

WeakResidual weak_residual(const Potential& p, const Field2D& u, const WeakTestSpec& spec = {});

inline std::vector<EquipartitionRow> equipartition4(const Potential& p, const Field2D& u, const JMin& jmin) {
  return equipartition_rows(p, u, jmin, Order::Fourth);
}

inline ProbeLedger minimality_probe4(const Potential& p, const Field2D& u, const ProbeSpec& spec) {
  return minimality_probe(p, u, spec, Order::Fourth);
}

inline LayerDecay layer_decay_fit4(const Potential& p, const Field2D& u, const Path1D& e_minus,
                                   const Path1D& e_plus) {
  return layer_decay_fit(p, u, e_minus, e_plus);
}

/// Pointwise  u_ttxx - Laplacian u + grad W(u)  at interior nodes (reported only).
Residual stencil_residual4(const Potential& p, const Field2D& u);

}  // namespace hetlayer
