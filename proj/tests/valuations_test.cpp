#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "kin/valuations.hpp"

using namespace kin;

namespace {

Vector vec(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

}  // namespace

TEST_CASE("intrinsic volumes of cones and quadratics") {
  const auto xi = RadialDensity::tent(1.5);
  const auto spec = ValuationSpec::scalar(2, 1, xi);
  CHECK(v_star(spec, ConvexFunction::cone(2, 1)).scalar() == doctest::Approx(1.25 * kPi).epsilon(0.01));
  const auto tent = ValuationSpec::scalar(2, 1, RadialDensity::tent(1.0));
  const auto quad = ConvexFunction::quadratic(Vector::Zero(2), 0.5);
  CHECK(v_star(tent, quad).scalar() == doctest::Approx(2 * kPi / 3).epsilon(0.01));
  const auto shifted = quad + ConvexFunction::affine(vec(0.4, -1.0), 2.0);
  CHECK(v_star(tent, shifted).scalar() == doctest::Approx(v_star(tent, quad).scalar()).epsilon(1e-8));
}

TEST_CASE("minkowski vectors of half cones") {
  const auto xi = RadialDensity::tent(2.0);  // xi(1) = 1
  const auto spec = ValuationSpec::vector(2, 1, xi);
  const auto t = t_star(spec, ConvexFunction::half_cone(2, 1));
  CHECK(std::abs(t.value(0)) < 1e-8);
  CHECK(t.value(1) == doctest::Approx(2.0).epsilon(0.02));
  CHECK(t_star(spec, ConvexFunction::cone(2, 1)).value.norm() < 1e-8);
  CHECK(t_star(spec, ConvexFunction::quartic_norm(Vector::Zero(2))).value.norm() < 1e-8);
}

TEST_CASE("rotation behaviour") {
  const auto xi = RadialDensity::tent(1.5);
  const auto vs = ValuationSpec::vector(2, 1, xi);
  const auto ss = ValuationSpec::scalar(2, 1, xi);
  const auto w = ConvexFunction::half_cone(2, 1);
  const auto u = ConvexFunction::quartic_norm(vec(0.5, 0));
  const Vector base = t_star(vs, w).value;
  const double scalar_base = v_star(ss, u).scalar();
  CounterRng rng(31, 0);
  for (int i = 0; i < 20; ++i) {
    const Rotation r = haar_rotation(2, rng);
    const Vector rotated = t_star(vs, w.rotated(r)).value;
    CHECK((rotated - r.apply(base)).norm() < 1e-8 * (1 + base.norm()));
    CHECK(v_star(ss, u.rotated(r)).scalar() == doctest::Approx(scalar_base).epsilon(1e-4));
  }
}

TEST_CASE("homogeneity") {
  const auto xi = RadialDensity::tent(1.5);
  for (int j = 1; j <= 2; ++j) {
    const auto spec = ValuationSpec::scalar(2, j, xi);
    const auto f = ConvexFunction::quartic_norm(vec(0.2, 0.3));
    const double base = v_star(spec, f).scalar();
    for (double lambda : {0.5, 2.0}) {
      CHECK(v_star(spec, lambda * f).scalar() == doctest::Approx(std::pow(lambda, j) * base).epsilon(0.01));
    }
  }
}

TEST_CASE("additivity on pairs of cones") {
  const auto xi = RadialDensity::tent(2.0);
  const auto spec = ValuationSpec::scalar(2, 1, xi);
  const auto vspec = ValuationSpec::vector(2, 1, xi);
  CounterRng rng(32, 0);
  for (int i = 0; i < 5; ++i) {
    const double t1 = testing::uniform(rng, 0.2, 1.8), t2 = testing::uniform(rng, 0.2, 1.8);
    const auto a = ConvexFunction::cone(2, t1), b = ConvexFunction::cone(2, t2);
    const auto hi = ConvexFunction::cone(2, std::min(t1, t2)), lo = ConvexFunction::cone(2, std::max(t1, t2));
    for (int k = 0; k < 20; ++k) {
      const Vector x = testing::random_point(rng, 2, 2.5);
      REQUIRE(eval(hi, x) == doctest::Approx(std::max(eval(a, x), eval(b, x))));
      REQUIRE(eval(lo, x) == doctest::Approx(std::min(eval(a, x), eval(b, x))));
    }
    const double lhs = v_star(spec, hi).scalar() + v_star(spec, lo).scalar();
    const double rhs = v_star(spec, a).scalar() + v_star(spec, b).scalar();
    CHECK(lhs == doctest::Approx(rhs).epsilon(0.01));
    const auto wa = ConvexFunction::half_cone(2, t1), wb = ConvexFunction::half_cone(2, t2);
    const auto whi = ConvexFunction::half_cone(2, std::min(t1, t2)), wlo = ConvexFunction::half_cone(2, std::max(t1, t2));
    const Vector vl = t_star(vspec, whi).value + t_star(vspec, wlo).value;
    const Vector vr = t_star(vspec, wa).value + t_star(vspec, wb).value;
    CHECK((vl - vr).norm() < 0.01 * vr.norm() + 1e-10);
  }
}

TEST_CASE("closed forms") {
  const auto xi = RadialDensity::tent(1.5);
  CHECK(closed_form_v_t(2, 1, xi, 1.0) == doctest::Approx(1.25 * kPi).epsilon(1e-12));
  CHECK(closed_form_v_t(2, 1, RadialDensity::tent(0.5), 1.0) == 0.0);
  for (int n = 2; n <= 3; ++n) {
    for (int j = 1; j < n; ++j) {
      for (double t : {0.3, 0.8, 1.2}) {
        CHECK(closed_form_v_t(n, j, xi, t) ==
              doctest::Approx(kappa(n) * binom(n, j) * R_power(xi, n - j)(t)).epsilon(1e-12));
      }
    }
  }
  const Vector w = closed_form_w_s(2, 1, RadialDensity::tent(2.0), 1.0);
  CHECK(w(0) == 0.0);
  CHECK(w(1) == doctest::Approx(2.0));
  CHECK(closed_form_w_s(2, 1, RadialDensity::tent(1.0), 1.0).norm() == 0.0);
  const Vector w3 = closed_form_w_s(3, 3, RadialDensity::tent(2.25), 2.0);
  CHECK(w3(2) == doctest::Approx(kPi / 6));
  CHECK(std::abs(w3(0)) + std::abs(w3(1)) == 0.0);
}

TEST_CASE("class requirements") {
  const auto wild = RadialDensity::analytic(
      "r^-3", [](double r) { return r < 1 ? std::pow(r, -3) - 1 : 0.0; }, 1.0, {}, 3.0);
  CHECK_THROWS_AS(ValuationSpec::scalar(2, 1, wild), ClassViolation);
  CHECK_THROWS_AS(ValuationSpec::vector(2, 3, RadialDensity::tent(1.0)), DomainError);
}

TEST_CASE("minkowski vectors of support functions vanish") {
  const auto alpha = RadialDensity::tent(1.5);
  CHECK(minkowski_vanishing(ConvexFunction::support_ball(1.0, Vector::Zero(2)), 1, alpha, 1e-6).pass);
  CHECK(minkowski_vanishing(ConvexFunction::support_ball(1.0, vec(0.3, 0)), 1, alpha, 1e-6).pass);
  const std::vector<double> d{1, 4};
  const auto r = minkowski_vanishing(ConvexFunction::support_ellipse(SymMatrix::diagonal(d)), 1, alpha, 1e-4);
  CHECK(r.pass);
  CHECK(r.lhs.norm() < 1e-4);
}
