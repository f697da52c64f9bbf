#include "kin/measures.hpp"

#include <algorithm>
#include <cmath>

#include "flat.hpp"

namespace kin {

using detail::Flat;
using detail::Profile;
using detail::RadialAtom;

const char* to_string(Route r) {
  switch (r) {
    case Route::Auto:
      return "auto";
    case Route::SmoothQuadrature:
      return "smooth_quadrature";
    case Route::ClosedForm:
      return "closed_form";
    case Route::Oracle:
      return "oracle";
  }
  return "unknown";
}

namespace {

constexpr double kCenterTol = 1e-14;

bool centred(const RadialAtom& a) { return a.center.norm() <= kCenterTol; }

bool smooth_flat(const Flat& fl) {
  if (!fl.axial.empty() || !fl.segments.empty()) {
    return false;
  }
  return std::none_of(fl.radial.begin(), fl.radial.end(),
                      [](const RadialAtom& a) { return a.profile == Profile::Cone && a.coefficient != 0.0; });
}

bool radial_flat(const Flat& fl) {
  return !fl.other && fl.axial.empty() && fl.segments.empty() &&
         std::all_of(fl.radial.begin(), fl.radial.end(), centred);
}

struct Axial {
  double mu = 0.0;
  double s = 0.0;
  Vector axis;
};

std::optional<Axial> axial_flat(const Flat& fl) {
  if (fl.other || !fl.radial.empty() || !fl.segments.empty() || fl.axial.empty()) {
    return std::nullopt;
  }
  Axial out;
  const auto& first = fl.axial.front();
  out.s = first.s;
  out.axis = first.frame.col(first.frame.cols() - 1);
  for (const auto& a : fl.axial) {
    if (std::abs(a.s - out.s) > 1e-14 * out.s || (a.frame - first.frame).norm() > 1e-12) {
      return std::nullopt;
    }
    out.mu += a.coefficient;
  }
  return out;
}

// Radial profile phi(r) of a radially reducible function.
struct RadialProfile {
  std::vector<RadialAtom> atoms;

  double right(double r) const {
    double d = 0.0;
    for (const auto& a : atoms) {
      d += detail::profile_right(a, r);
    }
    return d;
  }
  double left(double r) const {
    double d = 0.0;
    for (const auto& a : atoms) {
      d += detail::profile_left(a, r);
    }
    return d;
  }
  double second(double r) const {
    double d = 0.0;
    for (const auto& a : atoms) {
      d += detail::profile_second(a, r);
    }
    return d;
  }
  double slope_at_origin() const { return right(0.0); }
  std::vector<double> kinks() const {
    std::vector<double> k;
    for (const auto& a : atoms) {
      if (a.profile == Profile::Cone && a.coefficient != 0.0) {
        k.push_back(a.param);
      }
    }
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }
};

double integration_radius(const MeasureQuery& q) {
  double outer = q.density.support_upper();
  if (q.region_radius) {
    if (!(*q.region_radius >= 0.0)) {
      throw DomainError("measure query: region radius must be nonnegative");
    }
    outer = std::min(outer, *q.region_radius);
  }
  return outer;
}

void check_index(const MeasureQuery& q) {
  if (q.j < 0 || q.j > q.function.dim()) {
    throw DomainError("measure query: index j out of range");
  }
}

double density_at_origin(const RadialDensity& d) { return d.limit_at_zero(); }

std::vector<double> merged(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

WeightedIntegral zero_result(int n, WeightKind kind, Method m) {
  return kind == WeightKind::Scalar ? WeightedIntegral::scalar_result(0.0, m)
                                    : WeightedIntegral::vector_result(Vector::Zero(n), m);
}

// int w(|x|) density(x) dx (times x) over inner < |x| < outer. The excluded
// ball is estimated from two thin shells below the cutoff, assuming a
// geometric decay of their contributions.
WeightedIntegral shell_integral(int n, const std::function<double(double)>& radial_weight,
                                const std::function<double(const Vector&)>& density, double outer,
                                const std::vector<double>& kinks, const QuadratureSettings& settings,
                                WeightKind kind) {
  const int per = kind == WeightKind::Scalar ? 1 : n;
  if (!(outer > 0.0)) {
    return zero_result(n, kind, Method::SmoothQuadrature);
  }
  const double eps = settings.cutoff_fraction * outer;
  std::vector<Vector> dirs;
  std::vector<double> dir_w;
  sphere_rule(n, settings, dirs, dir_w);

  std::vector<double> main_r, main_w;
  radial_rule(eps, outer, settings.radial_nodes, kinks, main_r, main_w);

  auto accumulate = [&](const std::vector<double>& rs, const std::vector<double>& ws, Vector& acc, double& mass) {
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const double r = rs[i];
      const double w = radial_weight(r);
      if (w == 0.0) {
        continue;
      }
      const double jac = ws[i] * std::pow(r, n - 1) * w;
      for (std::size_t a = 0; a < dirs.size(); ++a) {
        const Vector x = r * dirs[a];
        const double d = density(x);
        const double c = jac * dir_w[a] * d;
        if (!std::isfinite(c)) {
          throw QuadratureError("quadrature: non-finite integrand at radius " + std::to_string(r));
        }
        if (per == 1) {
          acc(0) += c;
          mass += std::abs(c);
        } else {
          acc += c * x;
          mass += std::abs(c) * r;
        }
      }
    }
  };

  Vector main = Vector::Zero(per), shell_b = Vector::Zero(per), shell_a = Vector::Zero(per);
  double mass = 0.0;
  accumulate(main_r, main_w, main, mass);
  const GaussRule& g = gauss_legendre(10);
  auto shell_nodes = [&](double lo, double hi, std::vector<double>& rs, std::vector<double>& ws) {
    rs.clear();
    ws.clear();
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      rs.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * g.nodes[i]);
      ws.push_back(0.5 * (hi - lo) * g.weights[i]);
    }
  };
  std::vector<double> rs, ws;
  double shell_mass = 0.0;
  shell_nodes(0.5 * eps, eps, rs, ws);
  accumulate(rs, ws, shell_b, shell_mass);
  shell_nodes(0.25 * eps, 0.5 * eps, rs, ws);
  accumulate(rs, ws, shell_a, shell_mass);

  Vector value = main + shell_b + shell_a;
  double err2 = 0.0;
  for (int c = 0; c < per; ++c) {
    const double a = shell_a(c);
    const double b = shell_b(c);
    double tail = 0.0;
    double tail_err = std::abs(a);
    if (b != 0.0) {
      const double ratio = a / b;
      if (ratio > 0.0 && ratio < 0.95) {
        tail = a * ratio / (1.0 - ratio);
        tail_err = 0.5 * std::abs(tail);
      }
    }
    value(c) += tail;
    err2 += tail_err * tail_err;
  }
  const double err = std::sqrt(err2);
  if (settings.convergence_check && err > 1e-3 * (value.norm() + mass) && err > 1e-12) {
    throw QuadratureError("quadrature: cutoff ball contribution does not settle");
  }
  return per == 1 ? WeightedIntegral::scalar_result(value(0), Method::SmoothQuadrature, err)
                  : WeightedIntegral::vector_result(value, Method::SmoothQuadrature, err);
}

// Subdifferential of f at the origin as a body, when it is not a point.
std::optional<Body> origin_body(const ConvexFunction& f) {
  const int n = f.dim();
  const SubdiffSet sd = subdiff(f, Vector::Zero(n));
  if (sd.is_point()) {
    return std::nullopt;
  }
  if (sd.blocks().size() != 1) {
    throw UnsupportedVariant("measures: subdifferential at the origin is a Minkowski sum of several bodies");
  }
  const auto& b = sd.blocks().front();
  if (const auto* ball = std::get_if<SubdiffSet::Ball>(&b)) {
    return BallBody{ball->radius};
  }
  if (const auto* e = std::get_if<SubdiffSet::Ellipsoid>(&b)) {
    return EllipseBody{SymMatrix(e->factor * e->factor.transpose())};
  }
  if (const auto* s = std::get_if<SubdiffSet::Segment>(&b)) {
    return SegmentBody{(s->g1 - s->g0).norm()};
  }
  throw UnsupportedVariant("measures: unsupported subdifferential at the origin");
}

// Atom of Phi_j (phi = true) or MA_j at the origin.
double origin_atom(const ConvexFunction& f, int j, bool phi) {
  const int n = f.dim();
  const auto body = origin_body(f);
  if (!body) {
    return 0.0;
  }
  if (phi) {
    return j == n ? intrinsic_volume(*body, n, n) : 0.0;
  }
  return ma_support_mass(*body, n, j);
}

WeightedIntegral with_origin_atom(WeightedIntegral w, const MeasureQuery& q, double mass) {
  if (q.weight == WeightKind::Scalar && mass != 0.0) {
    w.value(0) += mass * density_at_origin(q.density);
  }
  return w;
}

std::function<double(double)> density_fn(const RadialDensity& d) {
  return [d](double r) { return r >= d.support_upper() ? 0.0 : d(r); };
}

// int xi(r) m(r) dr + sum xi(r_k) mass_k over (0, outer).
double marginal_integral(const RadialDensity& xi, double outer, const std::function<double(double)>& density,
                         const std::vector<std::pair<double, double>>& atoms, const std::vector<double>& kinks) {
  double total = 0.0;
  if (outer > 0.0) {
    const auto bp = merged(kinks, xi.breakpoints());
    total += integrate([&](double r) { return xi(r) * density(r); }, 0.0, outer, bp, 20);
  }
  for (const auto& [r, mass] : atoms) {
    if (mass == 0.0) {
      continue;
    }
    if (r == 0.0) {
      total += mass * density_at_origin(xi);
    } else if (r < outer) {
      total += mass * xi(r);
    }
  }
  return total;
}

}  // namespace

bool smooth_off_origin(const ConvexFunction& f) { return smooth_flat(detail::flatten(f)); }
bool radially_reducible(const ConvexFunction& f) { return radial_flat(detail::flatten(f)); }
bool axially_reducible(const ConvexFunction& f) { return axial_flat(detail::flatten(f)).has_value(); }

WeightedIntegral phi_integral_smooth(const MeasureQuery& q) {
  check_index(q);
  const ConvexFunction& f = q.function;
  const int n = f.dim();
  if (!smooth_off_origin(f)) {
    throw NotTwiceDifferentiable("smooth route: " + f.name() + " is not C^2 away from the origin");
  }
  const int j = q.j;
  const double outer = integration_radius(q);
  auto dens = [&f, j](const Vector& x) { return elem_sym(hessian(f, x), j); };
  WeightedIntegral w = shell_integral(n, density_fn(q.density), dens, outer, q.density.breakpoints(), q.settings,
                                      q.weight);
  return with_origin_atom(w, q, origin_atom(f, j, true));
}

WeightedIntegral phi_integral_closed(const MeasureQuery& q) {
  check_index(q);
  const ConvexFunction& f = q.function;
  const int n = f.dim();
  const int j = q.j;
  const Flat fl = detail::flatten(f);
  const double outer = integration_radius(q);
  if (radial_flat(fl)) {
    if (q.weight == WeightKind::Vector) {
      return zero_result(n, q.weight, Method::ClosedForm);
    }
    const RadialProfile p{fl.radial};
    const double om = omega(n);
    auto dens = [&](double r) {
      const double d1 = p.right(r);
      double v = binom(n - 1, j) * std::pow(d1, j) * std::pow(r, n - 1 - j);
      if (j >= 1) {
        v += binom(n - 1, j - 1) * p.second(r) * std::pow(d1, j - 1) * std::pow(r, n - j);
      }
      return om * v;
    };
    std::vector<std::pair<double, double>> atoms;
    if (j >= 1) {
      for (double r0 : p.kinks()) {
        const double a = p.left(r0);
        const double b = p.right(r0);
        atoms.emplace_back(r0, om * binom(n - 1, j - 1) * std::pow(r0, n - j) * (std::pow(b, j) - std::pow(a, j)) / j);
      }
    }
    if (j == n) {
      atoms.emplace_back(0.0, kappa(n) * std::pow(p.slope_at_origin(), n));
    }
    const double v = marginal_integral(q.density, outer, dens, atoms, p.kinks());
    return WeightedIntegral::scalar_result(v, Method::ClosedForm);
  }
  if (const auto ax = axial_flat(fl)) {
    if (q.weight == WeightKind::Scalar) {
      throw UnsupportedVariant("closed form: scalar Hessian integrals of w_s are not available");
    }
    if (q.region_radius && *q.region_radius < q.density.support_upper()) {
      throw UnsupportedVariant("closed form: the w_s vector integral needs the full support of the density");
    }
    if (j == 0) {
      return zero_result(n, q.weight, Method::ClosedForm);
    }
    const double xs = ax->s >= q.density.support_upper() ? 0.0 : q.density(ax->s);
    const double c = std::pow(ax->mu, j) * binom(n, j) * kappa(n - 1) * std::pow(ax->s, n - j + 1) * xs / n;
    return WeightedIntegral::vector_result(c * ax->axis, Method::ClosedForm);
  }
  throw UnsupportedVariant("closed form: " + f.name() + " is neither radial nor a multiple of w_s");
}

WeightedIntegral phi_integral(const MeasureQuery& q, Route route, const OracleSettings& oracle) {
  const ConvexFunction& f = q.function;
  if (route == Route::Auto) {
    const Flat fl = detail::flatten(f);
    if (radial_flat(fl) || (axial_flat(fl) && q.weight == WeightKind::Vector &&
                            (!q.region_radius || *q.region_radius >= q.density.support_upper()))) {
      route = Route::ClosedForm;
    } else if (smooth_flat(fl)) {
      route = Route::SmoothQuadrature;
    } else {
      route = Route::Oracle;
    }
  }
  switch (route) {
    case Route::ClosedForm:
      return phi_integral_closed(q);
    case Route::SmoothQuadrature:
      return phi_integral_smooth(q);
    case Route::Oracle:
    case Route::Auto:
      break;
  }
  check_index(q);
  return phi_weighted_oracle(f, q.j, q.density, q.weight, oracle, q.region_radius);
}

WeightedIntegral ma0_integral(int n, const RadialDensity& alpha, WeightKind weight,
                              std::optional<double> region_radius) {
  if (weight == WeightKind::Vector) {
    return WeightedIntegral::vector_result(Vector::Zero(n), Method::AnalyticDirac);
  }
  if (region_radius && *region_radius <= 0.0) {
    return WeightedIntegral::scalar_result(0.0, Method::AnalyticDirac);
  }
  return WeightedIntegral::scalar_result(kappa(n) * alpha.limit_at_zero(), Method::AnalyticDirac);
}

WeightedIntegral ma_j_smooth(const MeasureQuery& q) {
  check_index(q);
  const ConvexFunction& f = q.function;
  const int n = f.dim();
  if (q.j == 0) {
    return ma0_integral(n, q.density, q.weight, q.region_radius);
  }
  if (!smooth_off_origin(f)) {
    throw NotTwiceDifferentiable("smooth route: " + f.name() + " is not C^2 away from the origin");
  }
  const int j = q.j;
  const double outer = integration_radius(q);
  auto dens = [&f, j, n](const Vector& x) {
    const double r = x.norm();
    const Vector u = x / r;
    const Matrix p = (Matrix::Identity(n, n) - u * u.transpose()) / r;
    return mixed_det_two(hessian(f, x), SymMatrix(p), j);
  };
  WeightedIntegral w = shell_integral(n, density_fn(q.density), dens, outer, q.density.breakpoints(), q.settings,
                                      q.weight);
  return with_origin_atom(w, q, origin_atom(f, j, false));
}

WeightedIntegral ma_j_closed(const MeasureQuery& q) {
  check_index(q);
  const ConvexFunction& f = q.function;
  const int n = f.dim();
  const int j = q.j;
  if (j == 0) {
    return ma0_integral(n, q.density, q.weight, q.region_radius);
  }
  const Flat fl = detail::flatten(f);
  if (radial_flat(fl)) {
    if (q.weight == WeightKind::Vector) {
      return zero_result(n, q.weight, Method::ClosedForm);
    }
    const RadialMarginal m = ma_radial_marginal(f, j, integration_radius(q), q.settings);
    const double v = marginal_integral(q.density, m.outer, m.density, m.atoms, m.kinks);
    return WeightedIntegral::scalar_result(v, Method::ClosedForm);
  }
  if (const auto ax = axial_flat(fl)) {
    if (q.weight == WeightKind::Scalar) {
      throw UnsupportedVariant("closed form: scalar Monge-Ampere integrals of w_s are not available");
    }
    if (q.region_radius && *q.region_radius < q.density.support_upper()) {
      throw UnsupportedVariant("closed form: the w_s vector integral needs the full support of the density");
    }
    const RadialDensity inv = R_power(q.density, -(n - j));
    const double v = ax->s >= inv.support_upper() ? 0.0 : inv(ax->s);
    const double c = std::pow(ax->mu, j) * kappa(n - 1) * std::pow(ax->s, n - j + 1) * v / n;
    return WeightedIntegral::vector_result(c * ax->axis, Method::ClosedForm);
  }
  throw UnsupportedVariant("closed form: " + f.name() + " is neither radial nor a multiple of w_s");
}

WeightedIntegral ma_j_transform(const MeasureQuery& q, Route phi_route, const OracleSettings& oracle) {
  check_index(q);
  const int n = q.function.dim();
  if (q.j == 0) {
    return ma0_integral(n, q.density, q.weight, q.region_radius);
  }
  if (q.region_radius && *q.region_radius < q.density.support_upper()) {
    throw UnsupportedVariant("transform route: only integrals over the whole space are transformed");
  }
  MeasureQuery p = q;
  p.density = R_power(q.density, -(n - q.j)).scaled(1.0 / binom(n, q.j));
  p.region_radius.reset();
  return phi_integral(p, phi_route, oracle);
}

namespace {

double comparison_difference(const WeightedIntegral& a, const WeightedIntegral& b, double tolerance) {
  const double diff = (a.value - b.value).norm();
  const double scale = std::max(a.value.norm(), b.value.norm());
  const double floor = 1e-10 + 3.0 * (a.error_estimate + b.error_estimate);
  if (diff <= floor) {
    return 0.0;
  }
  (void)tolerance;
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

RouteComparison ma_j_routes(const MeasureQuery& q, double tolerance) {
  check_index(q);
  const Flat fl = detail::flatten(q.function);
  RouteComparison out;
  if (radial_flat(fl) || (axial_flat(fl) && q.weight == WeightKind::Vector)) {
    out.direct = ma_j_closed(q);
  } else if (smooth_flat(fl)) {
    out.direct = ma_j_smooth(q);
  } else {
    throw UnsupportedVariant("route comparison: no deterministic direct route for " + q.function.name());
  }
  const Route phi_route =
      radial_flat(fl) || axial_flat(fl) ? Route::ClosedForm : Route::SmoothQuadrature;
  out.transform = ma_j_transform(q, phi_route);
  out.relative_difference = comparison_difference(out.direct, out.transform, tolerance);
  if (out.relative_difference > tolerance) {
    throw RouteMismatch("MA_" + std::to_string(q.j) + " routes disagree for " + q.function.name() + ": relative " +
                        std::to_string(out.relative_difference));
  }
  return out;
}

WeightedIntegral ma_j_integral(const MeasureQuery& q, const OracleSettings& oracle) {
  check_index(q);
  const int n = q.function.dim();
  if (q.j == 0) {
    return ma0_integral(n, q.density, q.weight, q.region_radius);
  }
  const Flat fl = detail::flatten(q.function);
  const bool whole = !q.region_radius || *q.region_radius >= q.density.support_upper();
  if (radial_flat(fl) || smooth_flat(fl)) {
    if (!whole) {
      return radial_flat(fl) ? ma_j_closed(q) : ma_j_smooth(q);
    }
    RouteComparison c = ma_j_routes(q);
    WeightedIntegral w = c.direct;
    w.error_estimate = std::max(w.error_estimate, (c.direct.value - c.transform.value).norm());
    return w;
  }
  if (axial_flat(fl) && q.weight == WeightKind::Vector) {
    return ma_j_closed(q);
  }
  return ma_j_transform(q, Route::Oracle, oracle);
}

double intrinsic_volume(const Body& body, int n, int j) {
  if (n < 1 || n > kMaxDim || j < 0 || j > n) {
    throw DomainError("intrinsic_volume: index out of range");
  }
  if (const auto* b = std::get_if<BallBody>(&body)) {
    return binom(n, j) * kappa(n) / kappa(n - j) * std::pow(b->radius, j);
  }
  if (const auto* s = std::get_if<SegmentBody>(&body)) {
    return j == 0 ? 1.0 : (j == 1 ? s->length : 0.0);
  }
  const auto& e = std::get<EllipseBody>(body);
  if (e.shape.dim() != 2 || n != 2) {
    throw UnsupportedVariant("intrinsic_volume: ellipses are supported in the plane only");
  }
  if (j == 0) {
    return 1.0;
  }
  const auto ev = e.shape.eigenvalues();
  if (j == 2) {
    return kPi * std::sqrt(std::max(0.0, ev[0] * ev[1]));
  }
  // half the perimeter, the mean of the support function over the circle
  const double a = std::sqrt(std::max(0.0, ev[0]));
  const double b = std::sqrt(std::max(0.0, ev[1]));
  const double per = integrate(
      [&](double th) { return std::sqrt(a * a * std::cos(th) * std::cos(th) + b * b * std::sin(th) * std::sin(th)); },
      0.0, 2.0 * kPi, {}, 40);
  return 0.5 * per;
}

double ma_support_mass(const Body& body, int n, int j) {
  return kappa(n - j) * intrinsic_volume(body, n, j) / binom(n, j);
}

RadialMarginal ma_radial_marginal(const ConvexFunction& f, int i, double outer, const QuadratureSettings& settings) {
  const int n = f.dim();
  if (i < 0 || i > n) {
    throw DomainError("radial marginal: index out of range");
  }
  RadialMarginal m;
  m.outer = outer;
  if (i == 0) {
    m.atoms.emplace_back(0.0, kappa(n));
    m.density = [](double) { return 0.0; };
    m.has_density = false;
    return m;
  }
  const Flat fl = detail::flatten(f);
  const double kn = kappa(n);
  if (radial_flat(fl)) {
    const RadialProfile p{fl.radial};
    m.kinks = p.kinks();
    m.atoms.emplace_back(0.0, kn * std::pow(p.slope_at_origin(), i));
    for (double r0 : m.kinks) {
      m.atoms.emplace_back(r0, kn * (std::pow(p.right(r0), i) - std::pow(p.left(r0), i)));
    }
    m.density = [p, kn, i](double r) { return kn * i * std::pow(p.right(r), i - 1) * p.second(r); };
    m.has_density = std::any_of(p.atoms.begin(), p.atoms.end(), [](const RadialAtom& a) {
      return a.coefficient != 0.0 && (a.profile == Profile::Quadratic || a.profile == Profile::Quartic);
    });
    return m;
  }
  if (smooth_flat(fl)) {
    const double atom = origin_atom(f, i, false);
    if (atom != 0.0) {
      m.atoms.emplace_back(0.0, atom);
    }
    auto dirs = std::make_shared<std::vector<Vector>>();
    auto wts = std::make_shared<std::vector<double>>();
    sphere_rule(n, settings, *dirs, *wts);
    m.density = [f, n, i, dirs, wts](double r) {
      double sum = 0.0;
      for (std::size_t a = 0; a < dirs->size(); ++a) {
        const Vector& u = (*dirs)[a];
        const Matrix p = (Matrix::Identity(n, n) - u * u.transpose()) / r;
        sum += (*wts)[a] * mixed_det_two(hessian(f, r * u), SymMatrix(p), i);
      }
      return sum * std::pow(r, n - 1);
    };
    return m;
  }
  throw UnsupportedVariant("radial marginal: " + f.name() + " is neither radial nor C^2 away from the origin");
}

}  // namespace kin
