#include "kin/valuations.hpp"

#include <cmath>
#include <sstream>

namespace kin {

namespace {

void check_degree(int n, int j, int lo) {
  if (n < 1 || n > kMaxDim || j < lo || j > n) {
    throw DomainError("valuation: degree out of range");
  }
}

WeightedIntegral cross_checked(const ValuationSpec& spec, const ConvexFunction& f, WeightKind kind,
                               const ValuationOptions& options) {
  if (f.dim() != spec.n()) {
    throw DomainError("valuation: dimension mismatch");
  }
  MeasureQuery q{f, spec.j(), spec.density(), kind, std::nullopt, options.quadrature};
  const bool deterministic = radially_reducible(f) || smooth_off_origin(f) ||
                             (kind == WeightKind::Vector && axially_reducible(f));
  WeightedIntegral phi = phi_integral(q, Route::Auto, options.oracle);
  if (!deterministic) {
    return phi;
  }
  MeasureQuery m = q;
  m.density = spec.ma_density();
  WeightedIntegral ma = spec.j() == 0 ? ma0_integral(f.dim(), m.density, kind)
                        : radially_reducible(f) || axially_reducible(f) ? ma_j_closed(m)
                                                                         : ma_j_smooth(m);
  const double diff = (phi.value - ma.value).norm();
  const double scale = std::max(phi.value.norm(), ma.value.norm());
  const double floor = 1e-10 + 3.0 * (phi.error_estimate + ma.error_estimate);
  if (diff > floor && diff > options.route_tolerance * scale) {
    std::ostringstream os;
    os << "valuation routes disagree for " << f.name() << ": Hessian " << phi.value.transpose()
       << ", Monge-Ampere " << ma.value.transpose();
    throw RouteMismatch(os.str());
  }
  phi.error_estimate = std::max(phi.error_estimate, diff);
  return phi;
}

}  // namespace

ValuationSpec ValuationSpec::scalar(int n, int j, const RadialDensity& xi) {
  check_degree(n, j, 0);
  RadialDensity d = j < n ? xi.with_tag({ClassTag::Kind::D, n, j}) : xi.with_tag({ClassTag::Kind::D, n, n});
  return ValuationSpec(Kind::Scalar, n, j, d);
}

ValuationSpec ValuationSpec::vector(int n, int j, const RadialDensity& xi) {
  check_degree(n, j, 1);
  return ValuationSpec(Kind::Vector, n, j, xi.with_tag({ClassTag::Kind::T, n, j}));
}

RadialDensity ValuationSpec::ma_density() const { return R_power(density_, n_ - j_).scaled(binom(n_, j_)); }

WeightedIntegral v_star(const ValuationSpec& spec, const ConvexFunction& f, const ValuationOptions& options) {
  if (spec.kind() != ValuationSpec::Kind::Scalar) {
    throw DomainError("v_star: needs a scalar specification");
  }
  return cross_checked(spec, f, WeightKind::Scalar, options);
}

WeightedIntegral t_star(const ValuationSpec& spec, const ConvexFunction& f, const ValuationOptions& options) {
  if (spec.kind() != ValuationSpec::Kind::Vector) {
    throw DomainError("t_star: needs a vector specification");
  }
  return cross_checked(spec, f, WeightKind::Vector, options);
}

double closed_form_v_t(int n, int j, const RadialDensity& xi, double t) {
  if (n < 2 || n > kMaxDim || j < 1 || j > n - 1) {
    throw DomainError("closed_form_v_t: needs 1 <= j <= n-1");
  }
  if (!(t > 0.0)) {
    throw DomainError("closed_form_v_t: t must be positive");
  }
  const int m = n - j;
  const double xt = t >= xi.support_upper() ? 0.0 : xi(t);
  return kappa(n) * binom(n, j) * (std::pow(t, m) * xt + m * xi.tail_moment(t, m - 1));
}

Vector closed_form_w_s(int n, int j, const RadialDensity& xi, double s) {
  if (n < 2 || n > kMaxDim || j < 1 || j > n) {
    throw DomainError("closed_form_w_s: needs 1 <= j <= n");
  }
  if (!(s > 0.0)) {
    throw DomainError("closed_form_w_s: s must be positive");
  }
  const double xs = s >= xi.support_upper() ? 0.0 : xi(s);
  return binom(n, j) * kappa(n - 1) * std::pow(s, n - j + 1) * xs / n * unit_vector(n, n - 1);
}

VerificationReport minkowski_vanishing(const ConvexFunction& support_function, int j, const RadialDensity& alpha,
                                       double tolerance, const QuadratureSettings& settings) {
  const int n = support_function.dim();
  MeasureQuery q{support_function, j, alpha, WeightKind::Vector, std::nullopt, settings};
  const WeightedIntegral w = ma_j_smooth(q);
  VerificationReport r;
  r.identity = "minkowski_vanishing";
  r.n = n;
  r.j = j;
  r.lhs = w.value;
  r.rhs = Vector::Zero(n);
  r.lhs_method = to_string(w.method);
  r.rhs_method = "exact";
  r.stderr_estimate = w.error_estimate;
  r.tolerance = 0.0;
  r.abs_floor = tolerance;
  r.evaluate();
  std::ostringstream os;
  os << "function " << support_function.name() << "; quadrature error " << w.error_estimate
     << "; ten times the error estimate is " << 10.0 * w.error_estimate;
  add_note(r, os.str());
  return r;
}

}  // namespace kin
