#pragma once

// Radial test densities on (0, inf) and the transform calculus built on
//   R^m xi(s) = s^m xi(s) + m int_s^inf r^(m-1) xi(r) dr,
// which also inverts R^(-m) for negative m.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kin/numerics.hpp"

namespace kin {

struct ClassTag {
  enum class Kind { Cb, D, T };
  Kind kind = Kind::Cb;
  int n = 0;
  int j = 0;

  bool operator==(const ClassTag&) const = default;
  std::string str() const;
};

struct Certification {
  bool ok = true;
  bool warning = false;
  std::string message;
};

class RadialDensity {
 public:
  struct Impl;

  // xi(r) = values[0] for r <= knots[0], linear in between, 0 beyond the
  // last knot. The last value must be 0 (continuous, bounded support).
  static RadialDensity piecewise_linear(std::vector<double> knots, std::vector<double> values);
  // max(0, c - r)
  static RadialDensity tent(double c);
  // -ln(r / a) on (0, a], 0 beyond.
  static RadialDensity neg_log(double a = 1.0);
  // Generic continuous profile; tail moments by graded quadrature.
  static RadialDensity analytic(std::string name, std::function<double(double)> f, double support_upper,
                                std::vector<double> breakpoints = {}, double singularity_order = 0.0);

  double operator()(double r) const;
  // int_s^inf r^k xi(r) dr for s > 0 and any integer k.
  double tail_moment(double s, int k) const;
  double support_upper() const;
  std::vector<double> breakpoints() const;
  // xi(r) = O(r^(-order)) as r -> 0 (declared, logarithms count as 0+).
  double singularity_order() const;
  std::string description() const;

  // Limit at 0+; throws DomainError when it does not exist numerically.
  double limit_at_zero() const;

  std::optional<std::pair<std::vector<double>, std::vector<double>>> piecewise() const;

  const std::vector<ClassTag>& tags() const { return tags_; }
  bool has_tag(const ClassTag& tag) const;
  // Certifies and attaches the tag; throws ClassViolation on a clear failure.
  RadialDensity with_tag(const ClassTag& tag) const;

  RadialDensity scaled(double c) const;

 private:
  explicit RadialDensity(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  friend RadialDensity R_power(const RadialDensity& xi, int m);

  std::shared_ptr<const Impl> impl_;
  std::vector<ClassTag> tags_;
};

// Numerical limit certification of a tag on a geometric grid r = 2^-k.
Certification certify(const RadialDensity& xi, const ClassTag& tag);

RadialDensity R_apply(const RadialDensity& xi);
// Applies the R^m formula for any integer m; T^n_k tags move to T^(n-m)_k
// and are re-certified (ClassViolation on failure).
RadialDensity R_power(const RadialDensity& xi, int m);

// Bivariate density with a kink description along either axis.
struct BivariateDensity {
  std::function<double(double, double)> eval;
  double support_upper = 0.0;  // both coordinates
  // Kinks along axis `axis` (1 or 2) when the other coordinate is fixed.
  std::function<std::vector<double>(int axis, double other)> breakpoints;
};

BivariateDensity R_partial(const BivariateDensity& gamma, int axis, int m);

// (s, t) -> R_1^(n-k)(R^(-n+k) alpha)(max{s, t}), evaluated as written.
class KinematicKernel {
 public:
  KinematicKernel(const RadialDensity& alpha, int n, int k);

  double operator()(double s, double t) const;
  // alpha(max(s, t)), the collapsed form.
  double collapsed(double s, double t) const;

  int n() const { return n_; }
  int k() const { return k_; }
  const RadialDensity& alpha() const { return alpha_; }
  const RadialDensity& inner() const { return inner_; }

 private:
  RadialDensity alpha_;
  RadialDensity inner_;
  int n_;
  int k_;
  BivariateDensity composite_;
};

KinematicKernel kernel_make(const RadialDensity& alpha, int n, int k);

}  // namespace kin
