#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hetlayer/abstract_orbit.hpp"
#include "hetlayer/effective.hpp"
#include "hetlayer/layer2d.hpp"

using namespace hetlayer;

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

std::vector<double> uniform_times(double lo, double hi, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(lo + (hi - lo) * i / (n - 1));
  return t;
}

// Endpoints in R^5 with a non-Euclidean weighting.
struct Ends {
  std::vector<double> em{0.0, 1.0, -1.0, 0.5, 2.0};
  std::vector<double> ep{1.0, -1.0, 0.5, 0.5, 0.0};
  std::vector<double> w{1.0, 0.5, 2.0, 1.0, 0.25};
};

double distance(const AbstractOrbit& V, std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(V.d);
  for (std::size_t i = 0; i < V.d; ++i) d[i] = a[i] - b[i];
  return V.norm(d);
}

}  // namespace

TEST_CASE("nonsmooth orbit: speed sqrt2, transit time l0/sqrt2") {
  Ends e;
  auto V = nonsmooth_orbit(e.em, e.ep, uniform_times(-3, 6, 37), e.w);
  const double l0 = V.l0(), t1 = l0 / sqrt2;
  CHECK(V.t.back() > t1);
  auto speeds = segment_speeds(V);
  for (std::size_t k = 0; k + 1 < V.knots(); ++k) {
    const bool inside = V.t[k] >= 0.0 && V.t[k + 1] <= t1;
    // Equipartition for the characteristic potential: 1/2 |V'|^2 = 1 inside, 0 outside.
    CHECK(0.5 * speeds[k] * speeds[k] == doctest::Approx(inside ? 1.0 : 0.0).epsilon(1e-14));
  }
  CHECK(distance(V, V.sample(t1), e.ep) <= 1e-15 * l0);
  CHECK(distance(V, V.sample(0.0), e.em) == 0.0);
  // Before t1 the orbit has not arrived.
  CHECK(distance(V, V.sample(t1 * (1 - 1e-9)), e.ep) > 0.0);

  const auto A = orbit_action(V, OrbitPotential::characteristic());
  CHECK(A.total() == doctest::Approx(sqrt2 * l0).epsilon(1e-14));
  CHECK(A.kinetic == doctest::Approx(A.potential).epsilon(1e-14));
}

TEST_CASE("nonsmooth orbit with l0 = 2 reaches the midpoint at l0/(2 sqrt2)") {
  std::vector<double> em{-1.0, 0.0}, ep{1.0, 0.0};
  auto V = nonsmooth_orbit(em, ep, uniform_times(-2, 3, 11));
  CHECK(V.l0() == 2.0);
  CHECK(V.t.back() == 3.0);
  auto mid = V.sample(1.0 / sqrt2);
  CHECK(mid[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mid[1] == 0.0);
  CHECK(std::binary_search(V.t.begin(), V.t.end(), V.l0() / sqrt2));  // breakpoint is a knot
}

TEST_CASE("orbit constructors reject coincident endpoints") {
  std::vector<double> a{1.0, 2.0};
  CHECK_THROWS_AS(nonsmooth_orbit(a, a, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(segment_orbit(a, a, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("segment orbit") {
  Ends e;
  auto V = segment_orbit(e.em, e.ep, uniform_times(-2, 3, 6), e.w);
  auto mid = V.sample(0.5);
  for (std::size_t i = 0; i < V.d; ++i) CHECK(mid[i] == doctest::Approx(0.5 * (e.em[i] + e.ep[i])));
  auto speeds = segment_speeds(V);
  for (std::size_t k = 0; k + 1 < V.knots(); ++k) {
    const bool inside = V.t[k] >= 0.0 && V.t[k + 1] <= 1.0;
    CHECK(speeds[k] == doctest::Approx(inside ? V.l0() : 0.0).epsilon(1e-14));
  }
  auto mem = class_membership(V);
  CHECK(mem.member);
  CHECK(mem.t_minus == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(mem.t_plus == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("class membership") {
  Ends e;
  SUBCASE("nonsmooth orbit crosses at 3 l0/(4 sqrt2) and l0/(4 sqrt2)") {
    auto V = nonsmooth_orbit(e.em, e.ep, uniform_times(-3, 6, 19), e.w);
    auto mem = class_membership(V);
    REQUIRE(mem.member);
    CHECK(mem.t_minus == doctest::Approx(0.75 * V.l0() / sqrt2).epsilon(1e-14));
    CHECK(mem.t_plus == doctest::Approx(0.25 * V.l0() / sqrt2).epsilon(1e-14));
  }
  SUBCASE("a constant orbit at e- is not a member") {
    auto V = segment_orbit(e.em, e.ep, {-2.0, -1.0}, e.w);
    V.t = {-2.0, -1.0, 0.0};
    V.values.clear();
    for (int k = 0; k < 3; ++k) V.values.insert(V.values.end(), e.em.begin(), e.em.end());
    CHECK_FALSE(class_membership(V).member);
  }
  SUBCASE("an orbit starting beyond 3 l0/4 is not a member") {
    auto V = segment_orbit(e.em, e.ep, uniform_times(-2, 3, 6), e.w);
    for (std::size_t i = 0; i < V.d; ++i) V.values[i] = e.ep[i];
    CHECK_FALSE(class_membership(V).member);
  }
  SUBCASE("invalid orbits are rejected") {
    auto V = segment_orbit(e.em, e.ep, uniform_times(-2, 3, 6), e.w);
    V.t[2] = V.t[1];
    CHECK_THROWS_AS(class_membership(V), std::invalid_argument);
  }
}

TEST_CASE("membership is invariant under perturbations between the crossings") {
  // Projection profile rising to 0.9 l0, dipping to 0.1 l0, then rising to l0.
  std::vector<double> em{0.0, 0.0, 0.0}, ep{2.0, 0.0, 0.0};
  AbstractOrbit V = segment_orbit(em, ep, {}, {});
  V.t = uniform_times(-6, 6, 121);
  V.values.clear();
  for (double s : V.t) {
    double f;
    if (s < -3) f = 0.0;
    else if (s < -2) f = 0.9 * (s + 3);
    else if (s < 1) f = 0.9 - 0.8 * (s + 2) / 3;
    else if (s < 2) f = 0.1;
    else if (s < 3) f = 0.1 + 0.9 * (s - 2);
    else f = 1.0;
    V.values.insert(V.values.end(), {2.0 * f, 0.0, 0.0});
  }
  const auto base = class_membership(V);
  REQUIRE(base.member);
  REQUIRE(base.t_minus < base.t_plus);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    AbstractOrbit P = V;
    for (std::size_t k = 0; k < P.knots(); ++k)
      // The interpolated perturbation is supported in (t_minus, t_plus) only if both neighbours are.
      if (k > 0 && k + 1 < P.knots() && P.t[k - 1] >= base.t_minus && P.t[k + 1] <= base.t_plus)
        for (std::size_t i = 0; i < P.d; ++i) P.values[k * P.d + i] += n(rng);
    auto mem = class_membership(P);
    CHECK(mem.member);
    CHECK(mem.t_minus == base.t_minus);
    CHECK(mem.t_plus == base.t_plus);
  }
}

TEST_CASE("reparameterization") {
  Ends e;
  auto V = nonsmooth_orbit(e.em, e.ep, uniform_times(-3, 6, 37), e.w);

  SUBCASE("kappa = 1 is the identity") {
    auto R = reparameterize(V, V.t[5], V.t[20], 1.0);
    CHECK(R.t == V.t);
    CHECK(R.values == V.values);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(reparameterize(V, 0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(reparameterize(V, 0.0, 1.0, -2.0), std::invalid_argument);
    CHECK_THROWS_AS(reparameterize(V, 1.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(reparameterize(V, -10.0, 1.0, 2.0), std::invalid_argument);
  }
  SUBCASE("knots map exactly and membership is kept") {
    const double a = 0.2, b = 1.1, kappa = 2.5;
    auto R = reparameterize(V, a, b, kappa);
    for (double s : {-1.0, 0.0, 0.5, 0.9, 2.0, 4.0}) {
      const double image = s <= a ? s : (s <= b ? a + kappa * (s - a) : s + (kappa - 1) * (b - a));
      CHECK(distance(V, R.sample(image), V.sample(s)) <= 1e-14);
    }
    CHECK(class_membership(R).member);
  }
  SUBCASE("action difference against the closed-form integral") {
    const double l0 = V.l0(), t1 = l0 / sqrt2;
    struct Window {
      double a, b;
    };
    for (Window w : {Window{0.1 * t1, 0.7 * t1}, Window{-1.0, 0.5 * t1}, Window{0.3 * t1, 2.0 * t1}}) {
      for (double kappa : {0.5, 2.0}) {
        const auto before = orbit_action(V, OrbitPotential::characteristic());
        const auto after = orbit_action(reparameterize(V, w.a, w.b, kappa), OrbitPotential::characteristic());
        // |V'|^2 = 2 and chi = 1 on the transition part of [a, b]; both vanish elsewhere.
        const double len = std::min(w.b, t1) - std::max(w.a, 0.0);
        const double expect = len * ((1.0 - kappa) / (2.0 * kappa) * 2.0 + (kappa - 1.0) * 1.0);
        CHECK(std::fabs(after.total() - before.total() - expect) <= 1e-10);
      }
    }
  }
  SUBCASE("dilations compose on a fixed window") {
    const double a = -0.5, b = 1.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> k(0.2, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      const double k1 = k(rng), k2 = k(rng);
      auto twice = reparameterize(reparameterize(V, a, b, k1), a, a + k1 * (b - a), k2);
      auto once = reparameterize(V, a, b, k1 * k2);
      for (double s = -3.0; s < 12.0; s += 0.173)
        CHECK(distance(V, twice.sample(s), once.sample(s)) <= 1e-12);
    }
  }
}

TEST_CASE("quadrature rules on a polynomial potential") {
  // W(v) = |v - e-|^2 |v - e+|^2 along the segment is l0^4 s^2 (1-s)^2: integral l0^4 / 30.
  Ends e;
  auto V = segment_orbit(e.em, e.ep, uniform_times(-1, 2, 4), e.w);
  OrbitPotential W{.rule = OrbitPotential::Rule::GaussLegendre, .W = [&](std::span<const double> v) {
                     return std::pow(distance(V, v, e.em), 2) * std::pow(distance(V, v, e.ep), 2);
                   }};
  const double l0 = V.l0();
  CHECK(orbit_action(V, W).potential == doctest::Approx(std::pow(l0, 4) / 30.0).epsilon(1e-13));
  W.rule = OrbitPotential::Rule::Trapezoid;
  CHECK(orbit_action(V, W).potential == 0.0);  // trapezoid only sees the endpoints
  W.W = nullptr;
  CHECK_THROWS_AS(orbit_action(V, W), std::invalid_argument);
}

TEST_CASE("a strip field as an orbit reproduces the renormalized action") {
  auto p = make_elliptic_well();
  Grid1D gx = Grid1D::with_spacing(8.0, 0.1);
  auto F = build_heteroclinic_set(p, gx);
  Field2D u = smoothstep_initializer(Grid1D(4.0, 41), F.members[F.rep_minus].path, F.members[F.rep_plus].path);
  auto V = orbit_from_field(u);
  OrbitPotential W{.rule = OrbitPotential::Rule::Trapezoid, .W = [&](std::span<const double> v) {
                     return effective_potential_raw(p, Path1D(gx, 2, {v.begin(), v.end()}), F.j_min);
                   }};
  CHECK(orbit_action(V, W).total() == doctest::Approx(renormalized_action(p, u, F.j_min)).epsilon(1e-12));
  CHECK(class_membership(V).member);
}

namespace {

// |dA/dkappa| at kappa = 1 for the layer minimizer, dilating |t| <= T/2, relative
// to the kinetic plus potential action on that window.
double dilation_slope(double h) {
  auto p = make_elliptic_well();
  Grid1D gx = Grid1D::with_spacing(12.0, h), gt = Grid1D::with_spacing(12.0, h);
  auto F = build_heteroclinic_set(p, gx);
  LayerOptions o;
  o.tolerance = 1e-8;
  auto sol = minimize_layer(p, F, Grid2D{gt, gx}, std::nullopt, o);
  auto V = orbit_from_field(sol.field);
  OrbitPotential W{.rule = OrbitPotential::Rule::Trapezoid, .W = [&](std::span<const double> v) {
                     return effective_potential_raw(p, Path1D(gx, 2, {v.begin(), v.end()}), F.j_min);
                   }};
  const double a = -6.0, b = 6.0, dk = 1e-3;
  const auto window = orbit_action(insert_knot(insert_knot(V, a), b), W, a, b);
  const double slope =
      (orbit_action(reparameterize(V, a, b, 1 + dk), W).total() - orbit_action(reparameterize(V, a, b, 1 - dk), W).total()) /
      (2 * dk);
  return std::fabs(slope) / (window.kinetic + window.potential);
}

}  // namespace

TEST_CASE("dilating the layer minimizer is stationary to O(h^2)") {
  const double coarse = dilation_slope(0.1), fine = dilation_slope(0.05);
  MESSAGE("relative dA/dkappa: h=0.1 ", coarse, ", h=0.05 ", fine);
  CHECK(fine < 0.5 * coarse);
  CHECK(fine <= 2e-4);
}

TEST_CASE("dilating the layer minimizer is stationary within 1e-4 at h = 0.025") {
  const double fine = dilation_slope(0.025);
  MESSAGE("relative dA/dkappa at h=0.025: ", fine);
  CHECK(fine <= 1e-4);
}
