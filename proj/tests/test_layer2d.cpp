#include <cmath>
#include <random>

#include "doctest.h"
#include "hetlayer/effective.hpp"
#include "hetlayer/errors.hpp"
#include "hetlayer/layer2d.hpp"

using namespace hetlayer;

namespace {

struct Setup {
  Potential p;
  HeteroclinicSet F;
  Grid2D grid;
};

// Coarse elliptic-well problem shared by the solver tests.
const Setup& elliptic() {
  static const Setup s = [] {
    auto p = make_elliptic_well();
    Grid1D gx = Grid1D::with_spacing(10.0, 0.1), gt = Grid1D::with_spacing(8.0, 0.1);
    auto F = build_heteroclinic_set(p, gx);
    return Setup{p, F, Grid2D{gt, gx}};
  }();
  return s;
}

const LayerSolve& elliptic_layer() {
  static const LayerSolve s = [] {
    LayerOptions o;
    o.tolerance = 1e-8;
    return minimize_layer(elliptic().p, elliptic().F, elliptic().grid, std::nullopt, o);
  }();
  return s;
}

const Path1D& e_minus() { return elliptic().F.members[elliptic().F.rep_minus].path; }
const Path1D& e_plus() { return elliptic().F.members[elliptic().F.rep_plus].path; }

// Smoothstep field with interior noise; boundary rows and columns untouched.
Field2D noisy_field(std::mt19937_64& rng, double amp) {
  Field2D u = smoothstep_initializer(elliptic().grid.t, e_minus(), e_plus());
  std::uniform_real_distribution<double> d(-amp, amp);
  for (std::size_t i = 1; i + 1 < u.grid.rows(); ++i)
    for (std::size_t j = 1; j + 1 < u.grid.cols(); ++j)
      for (double& v : u.at(i, j)) v += d(rng);
  return u;
}

std::vector<double> gradient(const Potential& p, const Field2D& u, Order order, int jobs = 1) {
  std::vector<double> g(u.values.size());
  layer_energy(p, u.grid, u.m, u.values, g, order, jobs);
  return g;
}

Field2D reflect_reverse(const Field2D& u) {
  Field2D out = u;
  const std::size_t nt = u.grid.rows();
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < u.grid.cols(); ++j) {
      auto src = u.at(nt - 1 - i, j);
      auto dst = out.at(i, j);
      dst[0] = src[0];
      dst[1] = -src[1];
    }
  return out;
}

}  // namespace

TEST_CASE("energy of a constant well field is zero") {
  auto p = make_elliptic_well();
  Grid2D g{Grid1D(3.0, 31), Grid1D(4.0, 41)};
  CHECK(energy2d(p, constant_field(g, p.well_minus())) == 0.0);
  CHECK(energy2d(p, constant_field(g, p.well_plus())) == 0.0);
}

TEST_CASE("a t-independent field has energy 2T times its row action") {
  const auto& s = elliptic();
  Field2D u = separable_field(s.grid.t, e_minus());
  const double expect = 2.0 * s.grid.t.half_length() * discrete_action(s.p, e_minus());
  CHECK(energy2d(s.p, u) == doctest::Approx(expect).epsilon(1e-12));
  // And its renormalized action is just 2T times the (zero) effective potential.
  CHECK(std::fabs(renormalized_action(s.p, u, s.F.j_min)) < 1e-6);
}

TEST_CASE("renormalized action equals E - 2T J_min on random fields") {
  const auto& s = elliptic();
  std::mt19937_64 rng(7);
  const double two_t = 2.0 * s.grid.t.half_length();
  for (int trial = 0; trial < 20; ++trial) {
    Field2D u = noisy_field(rng, 0.3);
    const double E = energy2d(s.p, u);
    const double R = renormalized_action(s.p, u, s.F.j_min);
    CHECK(std::fabs(R - (E - two_t * s.F.j_min.value)) <= 1e-12 * std::fabs(E));
  }
}

TEST_CASE("energy gradient matches finite differences") {
  auto p = make_elliptic_well();
  Grid2D g{Grid1D(2.0, 11), Grid1D(3.0, 13)};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field2D u(g, 2);
  for (double& v : u.values) v = d(rng);
  // Boundary entries are treated as fixed (zero gradient); only the interior is checked.
  for (Order order : {Order::Second, Order::Fourth}) {
    auto grad = gradient(p, u, order);
    for (std::size_t i = 1; i + 1 < g.rows(); ++i)
      for (std::size_t j = 1; j + 1 < g.cols(); ++j)
        for (std::size_t k = 0; k < 2; ++k) {
          const std::size_t idx = u.index(i, j) + k;
          const double h = 1e-6;
          Field2D a = u, b = u;
          a.values[idx] += h;
          b.values[idx] -= h;
          const double fd = (layer_energy(p, g, 2, a.values, {}, order) - layer_energy(p, g, 2, b.values, {}, order)) /
                            (2 * h);
          CHECK(grad[idx] == doctest::Approx(fd).epsilon(1e-6));
        }
    for (std::size_t j = 0; j < g.cols(); ++j) CHECK(grad[u.index(0, j)] == 0.0);
  }
}

TEST_CASE("energy and gradient do not depend on the number of jobs") {
  const auto& s = elliptic();
  std::mt19937_64 rng(11);
  Field2D u = noisy_field(rng, 0.2);
  for (Order order : {Order::Second, Order::Fourth}) {
    std::vector<double> g1(u.values.size()), g4(u.values.size());
    const double e1 = layer_energy(s.p, u.grid, u.m, u.values, g1, order, 1);
    const double e4 = layer_energy(s.p, u.grid, u.m, u.values, g4, order, 4);
    CHECK(e1 == e4);
    CHECK(g1 == g4);
  }
}

TEST_CASE("energy is bit-identical under t-reversal combined with u2 reflection") {
  const auto& s = elliptic();
  std::mt19937_64 rng(5);
  Field2D u = noisy_field(rng, 0.2);
  Field2D r = reflect_reverse(u);
  CHECK(energy2d(s.p, r) == energy2d(s.p, u));
  CHECK(layer_energy(s.p, r.grid, 2, r.values, {}, Order::Fourth) ==
        layer_energy(s.p, u.grid, 2, u.values, {}, Order::Fourth));
}

TEST_CASE("patch energy over all cells equals the full energy") {
  const auto& s = elliptic();
  std::mt19937_64 rng(9);
  Field2D u = noisy_field(rng, 0.2);
  const double whole = patch_energy(s.p, u, 0, u.grid.rows() - 1, 0, u.grid.cols() - 1, Order::Second);
  CHECK(whole == doctest::Approx(energy2d(s.p, u)).epsilon(1e-12));
}

TEST_CASE("ball projection") {
  SUBCASE("needs an invariant radius") {
    auto p = make_elliptic_well();
    Grid2D g{Grid1D(1.0, 5), Grid1D(1.0, 5)};
    CHECK_THROWS_AS(ball_project(p, constant_field(g, p.well_plus())), UnsupportedOperation);
  }
  SUBCASE("identity inside, radial outside, energy does not increase") {
    auto p = make_decoupled_quartic(2, 1.5);
    Grid2D g{Grid1D(2.0, 21), Grid1D(3.0, 31)};
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      Field2D u(g, 2);
      for (double& v : u.values) v = d(rng);
      Field2D q = ball_project(p, u);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
          auto a = u.at(i, j);
          auto b = q.at(i, j);
          const double na = std::hypot(a[0], a[1]);
          if (na <= 1.5) {
            CHECK(a[0] == b[0]);
            CHECK(a[1] == b[1]);
          } else {
            CHECK(std::hypot(b[0], b[1]) == doctest::Approx(1.5).epsilon(1e-14));
            CHECK(b[0] * a[1] - b[1] * a[0] == doctest::Approx(0.0).epsilon(1e-12));
          }
        }
      CHECK(energy2d(p, q) <= energy2d(p, u) * (1 + 1e-14));
    }
  }
  SUBCASE("scales 2 rho down to rho") {
    auto p = make_decoupled_quartic(2, 1.5);
    Grid2D g{Grid1D(1.0, 5), Grid1D(1.0, 5)};
    std::vector<double> v{0.0, 3.0};
    Field2D q = ball_project(p, constant_field(g, v));
    CHECK(q.at(2, 2)[1] == doctest::Approx(1.5));
  }
}

TEST_CASE("pde residual") {
  const auto& s = elliptic();
  CHECK(pde_residual(s.p, constant_field(s.grid, s.p.well_minus())).sup == 0.0);
  // t-independent heteroclinic: the t part vanishes and the rest is the ODE residual.
  auto r = pde_residual(s.p, separable_field(s.grid.t, e_minus()));
  CHECK(r.sup <= 1e-7);
  CHECK(pde_residual(s.p, smoothstep_initializer(s.grid.t, e_minus(), e_plus())).sup > 1e-3);
}

TEST_CASE("equipartition rows of a t-independent heteroclinic") {
  const auto& s = elliptic();
  auto rows = equipartition_profile(s.p, separable_field(s.grid.t, e_minus()), s.F.j_min);
  REQUIRE(rows.size() == s.grid.rows() - 2);  // interior rows
  for (const auto& r : rows) {
    CHECK(r.lhs == 0.0);
    CHECK(std::fabs(r.rhs) <= 1e-6);
  }
  CHECK(rows.front().t == s.grid.t.node(1));
}

TEST_CASE("probes") {
  const auto& s = elliptic();
  Field2D u = smoothstep_initializer(s.grid.t, e_minus(), e_plus());
  SUBCASE("a null probe changes nothing") {
    Bump b{.ct = 0.0, .cx = 0.0, .wt = 1.0, .wx = 1.0, .amplitude = 0.0, .direction = {1.0, 0.0}};
    CHECK(probe_energy_change(s.p, u, bump_field(s.grid, 2, b), Order::Second) == 0.0);
  }
  SUBCASE("probes near the boundary are rejected") {
    Bump b{.ct = s.grid.t.half_length() - 0.1, .cx = 0.0, .wt = 0.5, .wx = 0.5, .amplitude = 0.1,
           .direction = {0.0, 1.0}};
    CHECK_THROWS_AS(probe_energy_change(s.p, u, bump_field(s.grid, 2, b), Order::Second), std::invalid_argument);
  }
  SUBCASE("local change equals the global change") {
    Bump b{.ct = 0.5, .cx = -0.3, .wt = 0.8, .wx = 0.6, .amplitude = 0.15, .direction = {0.6, 0.8}};
    Field2D phi = bump_field(s.grid, 2, b);
    Field2D v = u;
    for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] += phi.values[k];
    for (Order order : {Order::Second, Order::Fourth}) {
      const double global = layer_energy(s.p, s.grid, 2, v.values, {}, order) -
                            layer_energy(s.p, s.grid, 2, u.values, {}, order);
      CHECK(probe_energy_change(s.p, u, phi, order) == doctest::Approx(global).epsilon(1e-8));
    }
  }
  SUBCASE("a descent bump lowers the energy of a non-minimizer") {
    auto g = gradient(s.p, u, Order::Second);
    std::size_t best = 0;
    for (std::size_t k = 0; k < g.size(); k += 2)
      if (std::hypot(g[k], g[k + 1]) > std::hypot(g[best], g[best + 1])) best = k;
    const std::size_t node = best / 2, i = node / s.grid.cols(), j = node % s.grid.cols();
    const double n = std::hypot(g[best], g[best + 1]);
    Bump b{.ct = s.grid.t.node(i), .cx = s.grid.x.node(j), .wt = 0.5, .wx = 0.5, .amplitude = 0.01,
           .direction = {-g[best] / n, -g[best + 1] / n}};
    CHECK(probe_energy_change(s.p, u, bump_field(s.grid, 2, b), Order::Second) < 0.0);
    ProbeSpec spec;
    spec.count = 30;
    CHECK(minimality_probe(s.p, u, spec).all_passed == false);
  }
  SUBCASE("random bumps are reproducible from the seed") {
    ProbeSpec spec;
    auto a = random_bumps(s.grid, 2, spec), b = random_bumps(s.grid, 2, spec);
    REQUIRE(a.size() == 100);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].ct == b[k].ct);
      CHECK(a[k].amplitude == b[k].amplitude);
    }
  }
}

TEST_CASE("layer solver refuses a single-label set") {
  auto p = make_decoupled_quartic();
  Grid1D gx = Grid1D::with_spacing(8.0, 0.1);
  auto F = build_heteroclinic_set(p, gx);
  CHECK_THROWS_AS(minimize_layer(p, F, Grid2D{Grid1D(4.0, 41), gx}), HypothesisError);
  // And a mismatched x-grid is rejected.
  const auto& s = elliptic();
  CHECK_THROWS_AS(minimize_layer(s.p, s.F, Grid2D{s.grid.t, Grid1D(10.0, 101)}), std::invalid_argument);
}

TEST_CASE("equal boundary data give the t-independent field") {
  const auto& s = elliptic();
  LayerOptions o;
  o.tolerance = 1e-8;
  Grid1D gt(3.0, 31);
  auto sol = minimize_layer_between(s.p, e_minus(), e_minus(), gt, std::nullopt, o);
  CHECK(max_abs_difference(sol.field, separable_field(gt, e_minus())) <= 1e-6);
}

TEST_CASE("layer minimizer between the two families") {
  const auto& s = elliptic();
  const auto& sol = elliptic_layer();
  REQUIRE(sol.stats.converged);
  CHECK(pde_residual(s.p, sol.field).sup <= 1e-7);
  CHECK(sol.energy == energy2d(s.p, sol.field));

  SUBCASE("it lies strictly below the t-independent competitors") {
    CHECK(renormalized_action(s.p, sol.field, s.F.j_min) > 0.0);
    CHECK(sol.energy < energy2d(s.p, smoothstep_initializer(s.grid.t, e_minus(), e_plus())));
  }
  SUBCASE("re-solving from it is a fixed point") {
    LayerOptions o;
    o.tolerance = 1e-8;
    auto again = minimize_layer(s.p, s.F, s.grid, sol.field, o);
    CHECK(again.stats.iterations <= 2);
    CHECK(max_abs_difference(again.field, sol.field) <= 1e-9);
  }
  SUBCASE("it is symmetric under u2 reflection with t reversal") {
    Field2D r = reflect_reverse(sol.field);
    CHECK(energy2d(s.p, r) == energy2d(s.p, sol.field));
    CHECK(max_abs_difference(r, sol.field) <= 1e-5);
  }
  SUBCASE("it connects the two families") {
    auto cert = class_certificate(s.p, sol.field, s.F, Metric::L2);
    CHECK(cert.passed);
    CHECK(cert.t_minus <= -0.0);
    CHECK(cert.t_plus >= 0.0);
    CHECK(layer_decay_fit(s.p, sol.field, e_minus(), e_plus()).all_positive());
  }
  SUBCASE("random probes do not lower the energy") {
    ProbeSpec spec;
    spec.count = 40;
    auto led = minimality_probe(s.p, sol.field, spec);
    CHECK(led.all_passed);
    CHECK(led.records.size() == 40);
  }
  SUBCASE("solution does not depend on jobs") {
    LayerOptions o;
    o.tolerance = 1e-8;
    o.jobs = 3;
    auto par = minimize_layer(s.p, s.F, s.grid, std::nullopt, o);
    CHECK(par.field.values == sol.field.values);
  }
}
