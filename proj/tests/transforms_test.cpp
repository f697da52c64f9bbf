#include <doctest.h>

#include <cmath>
#include <vector>

#include "kin/transforms.hpp"

using namespace kin;

namespace {

double sup_gap(const RadialDensity& a, const RadialDensity& b, double top) {
  double worst = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double r = top * i / 200.0;
    worst = std::max(worst, std::abs(a(r) - b(r)));
  }
  return worst;
}

std::vector<RadialDensity> tents() {
  return {RadialDensity::tent(0.5), RadialDensity::tent(1.0), RadialDensity::tent(1.5),
          RadialDensity::piecewise_linear({0.2, 0.8, 1.4}, {1.0, 0.3, 0.0}),
          RadialDensity::piecewise_linear({0.5, 1.0, 2.0}, {0.0, 2.0, 0.0})};
}

}  // namespace

TEST_CASE("single transform") {
  const auto tent = RadialDensity::tent(1.0);
  CHECK(R_apply(tent)(0.5) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(R_apply(tent)(1.0) == 0.0);
  CHECK(R_apply(tent)(3.0) == 0.0);
  CHECK(R_apply(RadialDensity::neg_log(1.0))(0.5) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("powers of the transform") {
  const auto tent = RadialDensity::tent(1.0);
  CHECK(R_power(tent, 0)(0.4) == tent(0.4));
  CHECK(R_power(tent, 2)(0.5) == doctest::Approx(0.2916667).epsilon(1e-6));
  CHECK(R_power(tent, -1)(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("tail moments") {
  const auto tent = RadialDensity::tent(1.5);
  CHECK(tent.tail_moment(1.0, 0) == doctest::Approx(0.125));
  CHECK(tent.tail_moment(0.5, -1) == doctest::Approx(1.5 * std::log(3.0) - 1.0).epsilon(1e-12));
  CHECK(tent.tail_moment(2.0, 3) == 0.0);
}

TEST_CASE("round trip and semigroup") {
  for (const auto& xi : tents()) {
    const double top = xi.support_upper() * 1.1;
    for (int m = 1; m <= 3; ++m) {
      CHECK(sup_gap(R_power(R_power(xi, m), -m), xi, top) < 1e-8);
    }
    for (int a = 1; a <= 2; ++a) {
      for (int b = 1; a + b <= 3; ++b) {
        CHECK(sup_gap(R_power(xi, a + b), R_power(R_power(xi, a), b), top) < 1e-8);
      }
    }
  }
}

TEST_CASE("class certification") {
  const auto tent = RadialDensity::tent(1.5);
  CHECK(certify(tent, {ClassTag::Kind::Cb, 2, 0}).ok);
  CHECK(certify(tent, {ClassTag::Kind::T, 2, 2}).ok);
  CHECK(certify(tent, {ClassTag::Kind::D, 2, 1}).ok);
  // xi(r) = r^-3 near 0 is too singular for D^2_1: r xi(r) blows up
  const auto wild = RadialDensity::analytic(
      "r^-3", [](double r) { return r < 1 ? std::pow(r, -3) - 1 : 0.0; }, 1.0, {}, 3.0);
  CHECK_FALSE(certify(wild, {ClassTag::Kind::D, 2, 1}).ok);
  CHECK_THROWS_AS(wild.with_tag({ClassTag::Kind::D, 2, 1}), ClassViolation);
  CHECK_THROWS_AS(wild.limit_at_zero(), DomainError);
  CHECK(tent.limit_at_zero() == doctest::Approx(1.5));
  // r xi(r) -> 1 for xi = 1/r near 0
  const auto inverse = RadialDensity::analytic(
      "1/r", [](double r) { return r < 1 ? 1 / r - 1 : 0.0; }, 1.0, {}, 1.0);
  CHECK_FALSE(certify(inverse, {ClassTag::Kind::T, 2, 2}).ok);
  CHECK(certify(inverse, {ClassTag::Kind::T, 2, 1}).ok);
}

TEST_CASE("class transport") {
  for (int n = 2; n <= 3; ++n) {
    for (int k = 1; k <= n; ++k) {
      const auto xi = RadialDensity::tent(1.2).with_tag({ClassTag::Kind::T, n, k});
      for (int l = 0; l <= n - k; ++l) {
        const auto moved = R_power(xi, l);
        CHECK(moved.has_tag({ClassTag::Kind::T, n - l, k}));
        CHECK(certify(moved, {ClassTag::Kind::T, n - l, k}).ok);
      }
    }
  }
}

TEST_CASE("density validation") {
  CHECK_THROWS_AS(RadialDensity::piecewise_linear({0, 1}, {1, 0.5}), ConfigError);
  CHECK_THROWS_AS(RadialDensity::piecewise_linear({1, 0.5}, {1, 0}), ConfigError);
  CHECK_THROWS_AS(RadialDensity::piecewise_linear({}, {}), ConfigError);
  CHECK_THROWS_AS(RadialDensity::tent(-1), DomainError);
  const auto p = RadialDensity::piecewise_linear({0.5, 1.0}, {2.0, 0.0});
  CHECK(p(0.1) == 2.0);
  CHECK(p(0.75) == doctest::Approx(1.0));
  CHECK(p(5.0) == 0.0);
}

TEST_CASE("partial transforms") {
  const auto xi = RadialDensity::tent(1.0);
  BivariateDensity flat{[xi](double s, double) { return xi(s); }, 1.0,
                        [](int, double) { return std::vector<double>{}; }};
  const auto moved = R_partial(flat, 1, 1);
  for (double s : {0.1, 0.4, 0.8}) {
    for (double t : {0.2, 0.9}) {
      CHECK(moved.eval(s, t) == doctest::Approx(R_apply(xi)(s)).epsilon(1e-10));
    }
  }
  const auto g = R_power(RadialDensity::tent(1.0), -1);
  BivariateDensity gmax{[g](double s, double t) { return g(std::max(s, t)); }, 1.0,
                        [](int, double other) { return std::vector<double>{other}; }};
  const auto composite = R_partial(gmax, 1, 1);
  CHECK(composite.eval(0.3, 0.6) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(composite.eval(0.3, 0.0) == doctest::Approx(R_apply(g)(0.3)).epsilon(1e-9));
}

TEST_CASE("kinematic kernel") {
  const auto alpha = RadialDensity::tent(1.0);
  CHECK(kernel_make(alpha, 2, 1)(0.3, 0.6) == doctest::Approx(0.4).epsilon(1e-9));
  for (int n = 2; n <= 3; ++n) {
    const auto k = kernel_make(alpha, n, n);
    CHECK(k(0.2, 0.7) == alpha(0.7));
    for (int kk = 1; kk <= n; ++kk) {
      const auto ker = kernel_make(alpha, n, kk);
      for (double s : {0.1, 0.5, 0.9}) {
        CHECK(ker(s, 0.0) == doctest::Approx(alpha(s)).epsilon(1e-9));
      }
    }
  }
  CHECK_THROWS_AS(kernel_make(alpha, 2, 1)(0.0, 0.0), DomainError);
}

TEST_CASE("kernel collapse on a grid") {
  const auto alpha = RadialDensity::piecewise_linear({0.3, 1.0, 1.5}, {1.0, 0.4, 0.0});
  for (auto [n, k] : std::vector<std::pair<int, int>>{{2, 1}, {3, 1}, {3, 2}}) {
    const auto ker = kernel_make(alpha, n, k);
    double worst = 0.0;
    for (int a = 1; a <= 50; ++a) {
      for (int b = 1; b <= 50; ++b) {
        const double s = 1.6 * a / 50, t = 1.6 * b / 50;
        worst = std::max(worst, std::abs(ker(s, t) - ker.collapsed(s, t)));
      }
    }
    CHECK(worst < 1e-8);
  }
}
