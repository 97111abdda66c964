#include <cmath>
#include <random>

#include "doctest.h"
#include "hetlayer/errors.hpp"
#include "hetlayer/fourth_order.hpp"

using namespace hetlayer;

namespace {

struct Setup {
  Potential p;
  HeteroclinicSet F;
  Grid2D grid;
};

const Setup& elliptic() {
  static const Setup s = [] {
    auto p = make_elliptic_well();
    Grid1D gx = Grid1D::with_spacing(10.0, 0.1), gt = Grid1D::with_spacing(8.0, 0.1);
    auto F = build_heteroclinic_set(p, gx);
    return Setup{p, F, Grid2D{gt, gx}};
  }();
  return s;
}

const Path1D& rep_minus() { return elliptic().F.members[elliptic().F.rep_minus_h1].path; }
const Path1D& rep_plus() { return elliptic().F.members[elliptic().F.rep_plus_h1].path; }

const LayerSolve& layer4() {
  static const LayerSolve s = [] {
    LayerOptions o;
    o.tolerance = 1e-8;
    return minimize_layer4(elliptic().p, elliptic().F, elliptic().grid, std::nullopt, o);
  }();
  return s;
}

Field2D noisy_field(std::mt19937_64& rng, double amp) {
  Field2D u = smoothstep_initializer(elliptic().grid.t, rep_minus(), rep_plus());
  std::uniform_real_distribution<double> d(-amp, amp);
  for (std::size_t i = 1; i + 1 < u.grid.rows(); ++i)
    for (std::size_t j = 1; j + 1 < u.grid.cols(); ++j)
      for (double& v : u.at(i, j)) v += d(rng);
  return u;
}

}  // namespace

TEST_CASE("mixed term only adds energy, and vanishes on t-independent fields") {
  const auto& s = elliptic();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Field2D u = noisy_field(rng, 0.2);
    CHECK(energy4(s.p, u) > energy2d(s.p, u));
  }
  Field2D sep = separable_field(s.grid.t, rep_minus());
  CHECK(energy4(s.p, sep) == energy2d(s.p, sep));
}

TEST_CASE("action4 equals E4 - 2T J_min") {
  const auto& s = elliptic();
  std::mt19937_64 rng(8);
  const double two_t = 2.0 * s.grid.t.half_length();
  for (int trial = 0; trial < 20; ++trial) {
    Field2D u = noisy_field(rng, 0.3);
    const double E = energy4(s.p, u);
    CHECK(std::fabs(action4(s.p, u, s.F.j_min) - (E - two_t * s.F.j_min.value)) <= 1e-12 * std::fabs(E));
  }
}

TEST_CASE("weak form is the derivative of energy4 along the test function") {
  const auto& s = elliptic();
  std::mt19937_64 rng(12);
  Field2D u = noisy_field(rng, 0.1);
  std::vector<double> grad(u.values.size());
  layer_energy(s.p, u.grid, u.m, u.values, grad, Order::Fourth);
  for (const auto& b : weak_test_functions(s.grid, 2, {.count = 8})) {
    Field2D phi = bump_field(s.grid, 2, b);
    double gp = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) gp += grad[k] * phi.values[k];
    const double w = weak_form(s.p, u, phi);
    CHECK(w == doctest::Approx(gp).epsilon(1e-10));

    // Fourth-order central difference; E4 of a noisy field is ~1e5, so eps stays large.
    const double eps = 1e-3;
    auto E = [&](double s) {
      Field2D a = u;
      for (std::size_t k = 0; k < u.values.size(); ++k) a.values[k] += s * phi.values[k];
      return energy4(elliptic().p, a);
    };
    const double fd = (8.0 * (E(eps) - E(-eps)) - (E(2 * eps) - E(-2 * eps))) / (12.0 * eps);
    CHECK(w == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("weak test functions respect the margin and the seed") {
  const auto& s = elliptic();
  WeakTestSpec spec;
  auto a = weak_test_functions(s.grid, 2, spec);
  auto b = weak_test_functions(s.grid, 2, spec);
  REQUIRE(a.size() == 50);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].cx == b[k].cx);
    CHECK(a[k].wt == b[k].wt);
    // weak_form throws when the support reaches the margin.
    CHECK_NOTHROW(weak_form(s.p, constant_field(s.grid, s.p.well_minus()), bump_field(s.grid, 2, a[k])));
  }
  Bump edge{.ct = 0.0, .cx = s.grid.x.half_length() - 0.1, .wt = 1.0, .wx = 1.0, .amplitude = 1.0,
            .direction = {1.0, 0.0}};
  CHECK_THROWS_AS(weak_form(s.p, constant_field(s.grid, s.p.well_minus()), bump_field(s.grid, 2, edge)),
                  std::invalid_argument);
}

TEST_CASE("tensor H1 norm of a separable bump") {
  // phi = f(t) g(x) e1:  the norm factorizes into (|f|^2+|f'|^2)(|g|^2+|g'|^2) discretely.
  Grid2D g{Grid1D(3.0, 61), Grid1D(3.0, 61)};
  Bump b{.ct = 0.0, .cx = 0.0, .wt = 1.5, .wx = 1.5, .amplitude = 1.0, .direction = {1.0, 0.0}};
  const double n = tensor_h1_norm(bump_field(g, 2, b));
  // Continuum value of |c|^2 + |c'|^2 for c = cos^2(pi s / 3) on |s| < 1.5, squared.
  const double w = 1.5, pi = 3.141592653589793;
  const double l2 = 0.75 * w, d2 = pi * pi / (4.0 * w);
  CHECK(n * n == doctest::Approx((l2 + d2) * (l2 + d2)).epsilon(1e-2));
}

TEST_CASE("fourth-order solver refuses a single-label set") {
  auto p = make_decoupled_quartic();
  Grid1D gx = Grid1D::with_spacing(8.0, 0.1);
  auto F = build_heteroclinic_set(p, gx);
  CHECK_THROWS_AS(minimize_layer4(p, F, Grid2D{Grid1D(4.0, 41), gx}), HypothesisError);
}

TEST_CASE("fourth-order layer minimizer") {
  const auto& s = elliptic();
  const auto& sol = layer4();
  REQUIRE(sol.stats.converged);
  CHECK(sol.energy == doctest::Approx(energy4(s.p, sol.field)).epsilon(1e-14));

  SUBCASE("weak residual is small at the minimizer and O(1) at the initializer") {
    CHECK(weak_residual(s.p, sol.field).max <= 1e-6);
    CHECK(weak_residual(s.p, smoothstep_initializer(s.grid.t, rep_minus(), rep_plus())).max > 1e-3);
  }
  SUBCASE("stencil residual matches the scaled gradient") {
    CHECK(stencil_residual4(s.p, sol.field).sup <= 1e-7);
  }
  SUBCASE("renormalized action is positive and below the initializer") {
    CHECK(action4(s.p, sol.field, s.F.j_min) > 0.0);
    CHECK(sol.energy < energy4(s.p, smoothstep_initializer(s.grid.t, rep_minus(), rep_plus())));
  }
  SUBCASE("it connects the two families in H1") {
    auto cert = class_certificate(s.p, sol.field, s.F, Metric::H1);
    CHECK(cert.passed);
    CHECK(layer_decay_fit4(s.p, sol.field, rep_minus(), rep_plus()).all_positive());
  }
  SUBCASE("random probes do not lower the energy") {
    ProbeSpec spec;
    spec.count = 40;
    CHECK(minimality_probe4(s.p, sol.field, spec).all_passed);
  }
  SUBCASE("its energy exceeds the second-order minimum") {
    LayerOptions o;
    o.tolerance = 1e-8;
    auto l2 = minimize_layer(s.p, s.F, s.grid, std::nullopt, o);
    CHECK(sol.energy > l2.energy);
  }
}
