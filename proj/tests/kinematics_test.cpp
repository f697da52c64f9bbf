#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "kin/kinematics.hpp"

using namespace kin;

namespace {

Vector vec(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

KinematicExperiment experiment(ConvexFunction u, ConvexFunction v, RadialDensity alpha, int j, int rotations = 20) {
  return KinematicExperiment{.n = 2, .j = j, .alpha = std::move(alpha), .u = std::move(u), .v = std::move(v),
                             .rotations = rotations};
}

}  // namespace

TEST_CASE("classical formula for balls") {
  for (int j = 0; j <= 2; ++j) {
    const auto r = classical_balls(2, j, 1.0, 1.0);
    CHECK(r.pass);
    CHECK(r.abs_err < 1e-12);
  }
  CHECK(classical_balls(2, 1, 1, 1).lhs(0) == doctest::Approx(2 * kPi));
  CHECK(classical_balls(2, 0, 1, 1).lhs(0) == 1.0);
  for (int n = 2; n <= 3; ++n) {
    const auto r = classical_balls(n, n, 0.7, 1.1);
    CHECK(r.lhs(0) == doctest::Approx(kappa(n) * std::pow(1.8, n)).epsilon(1e-13));
    CHECK(r.abs_err < 1e-12);
  }
}

TEST_CASE("closed form of z") {
  const Vector a = z_closed_form(2, 1, RadialDensity::tent(2.0), 1.0, 1.0, 0.7, 0.4);
  CHECK(a(1) == doctest::Approx(2.0));
  CHECK(a(0) == 0.0);
  const Vector b = z_closed_form(2, 2, RadialDensity::tent(1.5), 1.0, 1.0, 1.0, 2.0);
  CHECK(b(1) == doctest::Approx(0.5));
  const auto xi = RadialDensity::tent(1.5);
  for (double s : {0.3, 0.7, 1.1}) {
    CHECK(z_closed_form(2, 1, xi, 1.0, s, 2.0, 0.5)(1) == doctest::Approx(closed_form_w_s(2, 1, xi, s)(1)).epsilon(1e-12));
    CHECK(z_closed_form(3, 2, xi, 1.0, s, 0.0, 0.5)(2) ==
          doctest::Approx(closed_form_w_s(3, 2, xi, s)(2)).epsilon(1e-12));
  }
}

TEST_CASE("z homogeneity and branch continuity") {
  const auto xi = RadialDensity::tent(1.5);
  for (int n = 2; n <= 3; ++n) {
    for (int j = 1; j <= n; ++j) {
      const double s = 0.6, t = 0.9;
      // scale mu and lambda by the same factor: every term has total degree j
      const Vector base = z_closed_form(n, j, xi, 1.0, s, 0.8, t);
      const Vector scaled = z_closed_form(n, j, xi, 2.0, s, 1.6, t);
      CHECK((scaled - std::pow(2.0, j) * base).norm() <= 1e-12 * (1 + scaled.norm()));
      for (double st : {0.4, 0.8, 1.2}) {
        const Vector below = z_closed_form(n, j, xi, 1.3, st, 0.7, st * (1 + 1e-13));
        const Vector above = z_closed_form(n, j, xi, 1.3, st, 0.7, st * (1 - 1e-13));
        const Vector at = z_closed_form(n, j, xi, 1.3, st, 0.7, st);
        CHECK((below - at).norm() < 1e-10);
        CHECK((above - at).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("scalar formula") {
  const auto quad = ConvexFunction::quadratic(Vector::Zero(2), 0.5);
  const auto r = scalar_kinematic(experiment(quad, quad, RadialDensity::tent(1.0), 1));
  CHECK(r.lhs(0) == doctest::Approx(kPi * kPi).epsilon(0.01));
  CHECK(r.rhs(0) == doctest::Approx(kPi * kPi).epsilon(0.01));
  CHECK(r.pass);
  const auto c = scalar_kinematic(experiment(ConvexFunction::cone(2, 1), ConvexFunction::cone(2, 2),
                                             RadialDensity::tent(3.0), 1));
  CHECK(c.rel_err < 0.03);
  const auto zero = ConvexFunction::zero(2);
  const auto z = scalar_kinematic(experiment(quad, zero, RadialDensity::tent(1.0), 1));
  CHECK(z.lhs(0) == doctest::Approx(kPi * kPi / 2).epsilon(1e-3));
  CHECK(z.rel_err < 0.01);
}

TEST_CASE("vector formula, closed channel") {
  const auto xi = RadialDensity::tent(1.5);
  for (int j = 1; j <= 2; ++j) {
    const RadialDensity alpha = R_power(xi, 2 - j).scaled(binom(2, j));
    const auto exp = experiment(ConvexFunction::half_cone(2, 0.5), ConvexFunction::cone(2, 1.0), alpha, j);
    const Vector rhs = rhs_vector(exp).value.value;
    CHECK((rhs - kappa(2) * z_closed_form(2, j, xi, 1.0, 0.5, 1.0, 1.0)).norm() < 1e-6 * rhs.norm());
  }
}

TEST_CASE("trivial partners") {
  const auto alpha = RadialDensity::tent(1.5);
  const auto u = ConvexFunction::half_cone(2, 1.0);
  const auto zero = ConvexFunction::zero(2);
  for (int j = 1; j <= 2; ++j) {
    const auto exp = experiment(u, zero, alpha, j);
    const Vector lhs = lhs_vector(exp).value.value;
    const Vector rhs = rhs_vector(exp).value.value;
    const Vector alone = ma_j_closed(MeasureQuery{u, j, alpha, WeightKind::Vector, std::nullopt, {}}).value;
    CHECK((lhs - kappa(2) * alone).norm() < 1e-9);
    CHECK((rhs - lhs).norm() < 1e-6);
  }
  const auto radial = experiment(ConvexFunction::cone(2, 0.5), ConvexFunction::quadratic(Vector::Zero(2), 0.5),
                                 RadialDensity::tent(1.0), 1);
  CHECK(lhs_vector(radial).value.value.norm() < 1e-3);
  CHECK(rhs_vector(radial).value.value.norm() < 1e-3);
}

TEST_CASE("rhs structure under rotations") {
  const auto alpha = RadialDensity::tent(1.2);
  const auto u = ConvexFunction::quartic_norm(vec(0.5, 0));
  const auto v = ConvexFunction::quadratic(vec(0, 0.7), 0.5);
  CounterRng rng(41, 0);
  const Vector base = rhs_vector(experiment(u, v, alpha, 1)).value.value;
  for (int i = 0; i < 5; ++i) {
    const Rotation r = haar_rotation(2, rng);
    const Vector moved_u = rhs_vector(experiment(u.rotated(r), v, alpha, 1)).value.value;
    const Vector moved_v = rhs_vector(experiment(u, v.rotated(r), alpha, 1)).value.value;
    CHECK((moved_u - r.apply(base)).norm() < 1e-4 * base.norm());
    CHECK((moved_v - base).norm() < 1e-4 * base.norm());
  }
}

TEST_CASE("corollary reduction") {
  const auto alpha = RadialDensity::tent(1.5);
  const auto u = ConvexFunction::half_cone(2, 1.0);
  const auto rhs = corollary_rhs(2, 2, alpha, u, BallBody{1.0});
  CHECK(rhs.value(1) == doctest::Approx(2 * kPi * std::log(1.5) + kPi / 2).epsilon(1e-8));
  const auto exp = experiment(u, ConvexFunction::support_ball(1.0, Vector::Zero(2)), alpha, 2);
  CHECK((rhs_vector(exp).value.value - rhs.value).norm() < 0.01 * rhs.value.norm());
}

TEST_CASE("experiment validation") {
  const auto quad = ConvexFunction::quadratic(Vector::Zero(2), 0.5);
  CHECK_THROWS_AS(validate(experiment(quad, quad, RadialDensity::tent(1.0), 3)), DomainError);
  const auto wild = RadialDensity::analytic(
      "1/r", [](double r) { return r < 1 ? 1 / r - 1 : 0.0; }, 1.0, {}, 1.0);
  CHECK_THROWS_AS(validate(experiment(quad, quad, wild, 1)), ClassViolation);
  CHECK_THROWS_AS(validate(experiment(quad, ConvexFunction::norm(3), RadialDensity::tent(1.0), 1)), DomainError);
}
