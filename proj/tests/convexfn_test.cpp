#include <doctest.h>

#include <cmath>
#include <vector>

#include "generators.hpp"
#include "kin/convexfn.hpp"

using namespace kin;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<long>(v.size()));
  long i = 0;
  for (double c : v) {
    x(i++) = c;
  }
  return x;
}

std::vector<ConvexFunction> zoo(int n) {
  std::vector<ConvexFunction> out{
      ConvexFunction::quadratic(Vector::Constant(n, 0.2), 0.5),
      ConvexFunction::quartic_norm(unit_vector(n, 0) * 0.5),
      ConvexFunction::cone(n, 1.0),
      ConvexFunction::half_cone(n, 0.7),
      ConvexFunction::support_ball(1.3, Vector::Constant(n, 0.1)),
      ConvexFunction::norm(n),
      ConvexFunction::affine(Vector::Constant(n, -0.4), 0.3),
      ConvexFunction::support_segment(0.8, unit_vector(n, n - 1), Vector::Zero(n)),
      2.0 * ConvexFunction::half_cone(n, 0.5) + 0.5 * ConvexFunction::cone(n, 1.0),
  };
  if (n == 2) {
    const std::vector<double> d{1, 4};
    out.push_back(ConvexFunction::support_ellipse(SymMatrix::diagonal(d)));
  }
  CounterRng rng(3, n);
  out.push_back(ConvexFunction::half_cone(n, 1.0).rotated(haar_rotation(n, rng)));
  return out;
}

}  // namespace

TEST_CASE("cone function values") {
  CHECK(eval(ConvexFunction::cone(2, 1), vec({2, 0})) == doctest::Approx(1));
  CHECK(eval(ConvexFunction::half_cone(2, 1), vec({3, -4})) == doctest::Approx(2));
  CHECK(eval(ConvexFunction::half_cone(2, 1), vec({0, -5})) == 0.0);
  CHECK(eval(ConvexFunction::half_cone(2, 1), vec({0, 3})) == doctest::Approx(2));
}

TEST_CASE("sum table of mu w_s + lambda v_t") {
  CHECK(eval_sum_cases(1, 1, 1, 2, vec({0, 1.5})) == doctest::Approx(0.5));
  CHECK(eval_sum_cases(1, 2, 1, 1, vec({0, 1.5})) == doctest::Approx(0.5));
  CounterRng rng(99, 0);
  for (int i = 0; i < 10000; ++i) {
    const int n = 2 + i % 2;
    const double mu = testing::uniform(rng, 0, 3), lambda = testing::uniform(rng, 0, 3);
    const double s = testing::uniform(rng, 0.1, 2), t = testing::uniform(rng, 0.1, 2);
    const Vector x = testing::random_point(rng, n, 3.0);
    const double direct = mu * eval(ConvexFunction::half_cone(n, s), x) + lambda * eval(ConvexFunction::cone(n, t), x);
    REQUIRE(std::abs(eval_sum_cases(mu, s, lambda, t, x) - direct) <= 1e-12 * (1 + std::abs(direct)));
  }
}

TEST_CASE("convexity spot check on every variant") {
  CounterRng rng(21, 0);
  for (int n = 2; n <= 3; ++n) {
    for (const auto& f : zoo(n)) {
      for (int i = 0; i < 300; ++i) {
        const Vector x = testing::random_point(rng, n, 2.5);
        const Vector y = testing::random_point(rng, n, 2.5);
        const double mid = eval(f, 0.5 * (x + y));
        const double chord = 0.5 * eval(f, x) + 0.5 * eval(f, y);
        REQUIRE(mid <= chord + 1e-12 * (1 + std::abs(chord)));
      }
    }
  }
}

TEST_CASE("derivatives match finite differences") {
  CounterRng rng(22, 0);
  for (int n = 2; n <= 3; ++n) {
    for (const auto& f : zoo(n)) {
      const auto radii = singular_radii(f);
      int checked = 0;
      for (int i = 0; i < 200 && checked < 30; ++i) {
        const Vector x = testing::random_point(rng, n, 2.0);
        Vector g;
        SymMatrix h = SymMatrix::zero(n);
        try {
          g = gradient(f, x);
          h = hessian(f, x);
        } catch (const NotDifferentiable&) {
          continue;
        } catch (const NotTwiceDifferentiable&) {
          continue;
        }
        bool near_kink = false;
        for (double r : radii) {
          near_kink = near_kink || std::abs(x.norm() - r) < 1e-3;
        }
        if (near_kink || x.norm() < 1e-2 || std::abs(x(n - 1)) < 1e-3) {
          continue;
        }
        ++checked;
        const double step = 1e-5;
        for (int k = 0; k < n; ++k) {
          const Vector e = unit_vector(n, k) * step;
          const double fd = (eval(f, x + e) - eval(f, x - e)) / (2 * step);
          CHECK(std::abs(fd - g(k)) < 1e-6 * (1 + std::abs(g(k))));
          Vector gp, gm;
          try {
            gp = gradient(f, x + e);
            gm = gradient(f, x - e);
          } catch (const Error&) {
            continue;
          }
          const Vector col = (gp - gm) / (2 * step);
          for (int l = 0; l < n; ++l) {
            CHECK(std::abs(col(l) - h(l, k)) < 1e-5 * (1 + std::abs(h(l, k))));
          }
        }
      }
    }
  }
}

TEST_CASE("gradients and hessians of the basic variants") {
  const Vector g = gradient(ConvexFunction::quadratic(Vector::Zero(2), 0.5), vec({1, 2}));
  CHECK(g(0) == doctest::Approx(1));
  CHECK(g(1) == doctest::Approx(2));
  const Vector gn = gradient(ConvexFunction::norm(2), vec({3, 4}));
  CHECK(gn(0) == doctest::Approx(0.6));
  CHECK(gn(1) == doctest::Approx(0.8));
  CHECK_THROWS_AS(gradient(ConvexFunction::norm(2), Vector::Zero(2)), NotDifferentiable);
  const SymMatrix hq = hessian(ConvexFunction::quadratic(vec({0.3, -1}), 0.5), vec({4, 5}));
  CHECK((hq.matrix() - Matrix::Identity(2, 2)).norm() < 1e-14);
  const SymMatrix hn = hessian(ConvexFunction::norm(2), vec({1, 0}));
  CHECK(hn(0, 0) == doctest::Approx(0));
  CHECK(hn(1, 1) == doctest::Approx(1));
  CHECK(hn(0, 1) == doctest::Approx(0));
  CHECK(hessian(ConvexFunction::cone(2, 1), vec({0.5, 0})).matrix().norm() == 0.0);
}

TEST_CASE("subdifferentials") {
  const auto cone = subdiff(ConvexFunction::cone(2, 1), vec({1, 0}));
  const auto seg = cone.as_segment();
  REQUIRE(seg.has_value());
  const double lo = std::min(seg->g0(0), seg->g1(0)), hi = std::max(seg->g0(0), seg->g1(0));
  CHECK(lo == doctest::Approx(0));
  CHECK(hi == doctest::Approx(1));
  CHECK(std::abs(seg->g0(1)) < 1e-15);

  const auto sum = subdiff(ConvexFunction::cone(2, 1) + ConvexFunction::quadratic(Vector::Zero(2), 0.5), vec({1, 0}));
  const auto seg2 = sum.as_segment();
  REQUIRE(seg2.has_value());
  CHECK(std::min(seg2->g0(0), seg2->g1(0)) == doctest::Approx(1));
  CHECK(std::max(seg2->g0(0), seg2->g1(0)) == doctest::Approx(2));

  const auto smooth = subdiff(ConvexFunction::quadratic(Vector::Zero(2), 0.5), vec({0.3, 0.4}));
  REQUIRE(smooth.is_point());
  CHECK((smooth.point() - vec({0.3, 0.4})).norm() < 1e-15);

  const auto ball = subdiff(ConvexFunction::norm(2), Vector::Zero(2));
  CHECK(ball.contains(vec({0.6, 0.8}), 1e-12));
  CHECK_FALSE(ball.contains(vec({0.8, 0.8}), 1e-12));
}

TEST_CASE("prox closed forms") {
  const auto cone = ConvexFunction::cone(2, 1);
  const Vector a = prox(cone, 0.5, vec({2, 0}));
  CHECK(a(0) == doctest::Approx(1.5));
  CHECK(std::abs(a(1)) < 1e-14);
  const Vector b = prox(cone, 0.5, vec({1.2, 0}));
  CHECK(b(0) == doctest::Approx(1));
  const Vector flat = prox(cone, 0.5, vec({0.3, -0.2}));
  CHECK((flat - vec({0.3, -0.2})).norm() < 1e-15);
}

TEST_CASE("prox optimality and nonexpansiveness") {
  CounterRng rng(23, 0);
  for (int n = 2; n <= 3; ++n) {
    for (const auto& f : zoo(n)) {
      const ProxOperator op(f);
      for (int i = 0; i < 100; ++i) {
        const double s = testing::uniform(rng, 0.05, 1.0);
        const Vector z = testing::random_point(rng, n, 3.0);
        const Vector x = op(s, z);
        const auto sd = subdiff(f, x, 1e-9);
        CHECK(sd.scaled(s).distance(z - x) <= 1e-6 * (1 + z.norm()));
        const Vector z2 = testing::random_point(rng, n, 3.0);
        CHECK((op(s, z2) - x).norm() <= (z2 - z).norm() * (1 + 1e-9) + 1e-12);
      }
    }
  }
}

TEST_CASE("rotation invariance detection") {
  CHECK(is_rotation_invariant(ConvexFunction::cone(2, 1)));
  CHECK(is_rotation_invariant(ConvexFunction::norm(3)));
  CHECK_FALSE(is_rotation_invariant(ConvexFunction::half_cone(2, 1)));
  CHECK_FALSE(is_rotation_invariant(ConvexFunction::quadratic(unit_vector(2, 0), 0.5)));
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(ConvexFunction::cone(2, -1), DomainError);
  CHECK_THROWS_AS(ConvexFunction::half_cone(2, 0), DomainError);
  const std::vector<double> d{1, -1};
  CHECK_THROWS_AS(ConvexFunction::support_ellipse(SymMatrix::diagonal(d)), DomainError);
  CHECK_THROWS_AS(ConvexFunction::combination({{-1.0, ConvexFunction::norm(2)}}), DomainError);
}
