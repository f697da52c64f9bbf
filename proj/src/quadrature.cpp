#include "kin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kin {

const char* to_string(Method m) {
  switch (m) {
    case Method::SmoothQuadrature:
      return "smooth_quadrature";
    case Method::ProxSteiner:
      return "prox_steiner";
    case Method::AnalyticDirac:
      return "analytic_dirac";
    case Method::ClosedForm:
      return "closed_form";
  }
  return "unknown";
}

const char* to_string(WeightKind w) { return w == WeightKind::Scalar ? "scalar" : "vector"; }

WeightedIntegral WeightedIntegral::scalar_result(double v, Method m, double err) {
  WeightedIntegral out;
  out.weight = WeightKind::Scalar;
  out.value = Vector::Constant(1, v);
  out.method = m;
  out.error_estimate = err;
  return out;
}

WeightedIntegral WeightedIntegral::vector_result(const Vector& v, Method m, double err) {
  WeightedIntegral out;
  out.weight = WeightKind::Vector;
  out.value = v;
  out.method = m;
  out.error_estimate = err;
  return out;
}

WeightedIntegral operator+(const WeightedIntegral& a, const WeightedIntegral& b) {
  if (a.weight != b.weight || a.value.size() != b.value.size()) {
    throw DomainError("WeightedIntegral: cannot add results of different shape");
  }
  WeightedIntegral out = a;
  out.value = a.value + b.value;
  out.error_estimate = std::hypot(a.error_estimate, b.error_estimate);
  if (a.method != b.method) {
    // Mixed provenance: the least exact method wins the tag.
    out.method = static_cast<int>(a.method) < static_cast<int>(b.method) ? a.method : b.method;
  }
  return out;
}

WeightedIntegral operator*(double c, const WeightedIntegral& a) {
  WeightedIntegral out = a;
  out.value = c * a.value;
  out.error_estimate = std::abs(c) * a.error_estimate;
  return out;
}

void radial_rule(double inner, double outer, int total_nodes, std::span<const double> kinks,
                 std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.clear();
  weights.clear();
  if (!(outer > inner) || !(inner >= 0.0)) {
    throw DomainError("radial_rule: need 0 <= inner < outer");
  }
  std::vector<double> cuts{inner, outer};
  for (double k : kinks) {
    if (k > inner && k < outer) {
      cuts.push_back(k);
    }
  }
  if (inner > 0.0) {
    for (double g = 4.0 * inner; g < outer; g *= 4.0) {
      cuts.push_back(g);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const int panels = static_cast<int>(cuts.size()) - 1;
  const int order = std::max(8, total_nodes / std::max(1, panels));
  const GaussRule& rule = gauss_legendre(order);
  for (int p = 0; p < panels; ++p) {
    const double lo = cuts[p];
    const double hi = cuts[p + 1];
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      nodes.push_back(mid + half * rule.nodes[i]);
      weights.push_back(half * rule.weights[i]);
    }
  }
}

namespace {

void sphere_rule_rec(int n, const QuadratureSettings& settings, std::vector<Vector>& dirs,
                     std::vector<double>& weights) {
  if (n == 1) {
    dirs = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
    weights = {1.0, 1.0};
    return;
  }
  if (n == 2) {
    const int m = settings.angular_nodes;
    dirs.resize(m);
    weights.assign(m, 2.0 * kPi / m);
    for (int i = 0; i < m; ++i) {
      // Half-step offset keeps nodes off the coordinate axes, where the
      // test functions have their kinks.
      const double phi = 2.0 * kPi * (i + 0.5) / m;
      Vector d(2);
      d << std::cos(phi), std::sin(phi);
      dirs[i] = d;
    }
    return;
  }
  // x = (sin(theta) y, cos(theta)), y on S^(n-2), density sin^(n-2)(theta).
  QuadratureSettings inner = settings;
  inner.angular_nodes = std::max(8, settings.angular_nodes / 4);
  std::vector<Vector> sub_dirs;
  std::vector<double> sub_w;
  sphere_rule_rec(n - 1, inner, sub_dirs, sub_w);
  const GaussRule& rule = gauss_legendre(settings.polar_nodes);
  dirs.clear();
  weights.clear();
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = 0.5 * kPi * (rule.nodes[i] + 1.0);
    const double wt = 0.5 * kPi * rule.weights[i] * std::pow(std::sin(theta), n - 2);
    for (std::size_t k = 0; k < sub_dirs.size(); ++k) {
      Vector d(n);
      d.head(n - 1) = std::sin(theta) * sub_dirs[k];
      d(n - 1) = std::cos(theta);
      dirs.push_back(d);
      weights.push_back(wt * sub_w[k]);
    }
  }
}

}  // namespace

void sphere_rule(int n, const QuadratureSettings& settings, std::vector<Vector>& directions,
                 std::vector<double>& weights) {
  if (n < 2 || n > kMaxDim) {
    throw DomainError("sphere_rule: dimension must be in 2..4");
  }
  sphere_rule_rec(n, settings, directions, weights);
}

QuadratureGrid QuadratureGrid::make(int n, double inner, double outer, const QuadratureSettings& settings,
                                    std::span<const double> kinks) {
  QuadratureGrid grid;
  grid.n = n;
  grid.inner_radius = inner;
  grid.outer_radius = outer;
  radial_rule(inner, outer, settings.radial_nodes, kinks, grid.radial_nodes, grid.radial_weights);
  sphere_rule(n, settings, grid.directions, grid.angular_weights);
  return grid;
}

WeightedIntegral product_quadrature(const std::function<double(const Vector&)>& integrand,
                                    const QuadratureGrid& grid, WeightKind weight) {
  const int n = grid.n;
  Vector acc = Vector::Zero(weight == WeightKind::Scalar ? 1 : n);
  for (std::size_t i = 0; i < grid.radial_nodes.size(); ++i) {
    const double r = grid.radial_nodes[i];
    const double wr = grid.radial_weights[i] * std::pow(r, n - 1);
    for (std::size_t k = 0; k < grid.directions.size(); ++k) {
      const Vector x = r * grid.directions[k];
      const double v = integrand(x);
      if (!std::isfinite(v)) {
        throw QuadratureError("product_quadrature: non-finite integrand at |x| = " + std::to_string(r));
      }
      const double w = wr * grid.angular_weights[k] * v;
      if (weight == WeightKind::Scalar) {
        acc(0) += w;
      } else {
        acc += w * x;
      }
    }
  }
  WeightedIntegral out;
  out.weight = weight;
  out.value = acc;
  out.method = Method::SmoothQuadrature;
  return out;
}

}  // namespace kin
