#pragma once

// Functional intrinsic volumes V*_{j,xi}(f) = int xi(|x|) dPhi_j(f; x) and
// Minkowski vectors t*_{j,xi}(f) = int xi(|x|) x dPhi_j(f; x), their closed
// forms on the cone functions, and the vanishing of Minkowski vectors on
// support functions.

#include "kin/measures.hpp"
#include "kin/report.hpp"

namespace kin {

class ValuationSpec {
 public:
  enum class Kind { Scalar, Vector };

  // Certifies xi in D^n_j (scalar) or T^n_j (vector).
  static ValuationSpec scalar(int n, int j, const RadialDensity& xi);
  static ValuationSpec vector(int n, int j, const RadialDensity& xi);

  Kind kind() const { return kind_; }
  int n() const { return n_; }
  int j() const { return j_; }
  const RadialDensity& density() const { return density_; }
  // alpha = C(n, j) R^(n-j) xi, the Monge-Ampere density.
  RadialDensity ma_density() const;

 private:
  ValuationSpec(Kind kind, int n, int j, RadialDensity xi) : kind_(kind), n_(n), j_(j), density_(std::move(xi)) {}
  Kind kind_;
  int n_;
  int j_;
  RadialDensity density_;
};

struct ValuationOptions {
  QuadratureSettings quadrature{};
  OracleSettings oracle{};
  double route_tolerance = 0.01;
};

// Hessian-measure route, cross-checked against the Monge-Ampere route when
// both are deterministic (RouteMismatch otherwise).
WeightedIntegral v_star(const ValuationSpec& spec, const ConvexFunction& f, const ValuationOptions& options = {});
WeightedIntegral t_star(const ValuationSpec& spec, const ConvexFunction& f, const ValuationOptions& options = {});

// kappa_n C(n,j) [t^(n-j) xi(t) + (n-j) int_t^inf r^(n-j-1) xi(r) dr], 1 <= j <= n-1.
double closed_form_v_t(int n, int j, const RadialDensity& xi, double t);
// (1/n) C(n,j) kappa_(n-1) s^(n-j+1) xi(s) e_n, 1 <= j <= n.
Vector closed_form_w_s(int n, int j, const RadialDensity& xi, double s);

// int alpha(|x|) x dMA_j(h_K; x) by the smooth route; passes when its norm is
// at most `tolerance`.
VerificationReport minkowski_vanishing(const ConvexFunction& support_function, int j, const RadialDensity& alpha,
                                       double tolerance, const QuadratureSettings& settings = {});

}  // namespace kin
