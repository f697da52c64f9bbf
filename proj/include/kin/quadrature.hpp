#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kin/numerics.hpp"

namespace kin {

enum class WeightKind { Scalar, Vector };

enum class Method { SmoothQuadrature, ProxSteiner, AnalyticDirac, ClosedForm };

const char* to_string(Method m);
const char* to_string(WeightKind w);

// Result of integrating a radial density against a measure. `value` has one
// entry for scalar weight and n entries for the vector weight x.
struct WeightedIntegral {
  WeightKind weight = WeightKind::Scalar;
  Vector value;
  Method method = Method::ClosedForm;
  double error_estimate = 0.0;

  double scalar() const { return value(0); }

  static WeightedIntegral scalar_result(double v, Method m, double err = 0.0);
  static WeightedIntegral vector_result(const Vector& v, Method m, double err = 0.0);
};

WeightedIntegral operator+(const WeightedIntegral& a, const WeightedIntegral& b);
WeightedIntegral operator*(double c, const WeightedIntegral& a);

struct QuadratureSettings {
  int radial_nodes = 128;      // total Gauss-Legendre nodes in r
  int angular_nodes = 512;     // equispaced circle nodes (azimuth)
  int polar_nodes = 48;        // Gauss-Legendre nodes per polar angle, n >= 3
  double cutoff_fraction = 1e-3;  // inner radius = cutoff_fraction * outer
  bool convergence_check = true;  // rerun with halved cutoff
};

// Tensor grid on the annulus inner <= |x| <= outer. Radial weights integrate
// dr (the Jacobian r^(n-1) is applied by product_quadrature); angular
// weights integrate the surface measure and sum to omega(n).
struct QuadratureGrid {
  int n = 2;
  double inner_radius = 0.0;
  double outer_radius = 1.0;
  std::vector<double> radial_nodes;
  std::vector<double> radial_weights;
  std::vector<Vector> directions;
  std::vector<double> angular_weights;

  // `kinks` are radii where the integrand is not smooth; they become panel
  // boundaries so no node lies on them.
  static QuadratureGrid make(int n, double inner, double outer, const QuadratureSettings& settings,
                             std::span<const double> kinks = {});
};

// Panelled Gauss-Legendre nodes on [inner, outer] with geometric grading
// toward `inner` and panel boundaries at the kinks.
void radial_rule(double inner, double outer, int total_nodes, std::span<const double> kinks,
                 std::vector<double>& nodes, std::vector<double>& weights);

// Angular rule on S^(n-1).
void sphere_rule(int n, const QuadratureSettings& settings, std::vector<Vector>& directions,
                 std::vector<double>& weights);

// Integral of integrand(x) dx (times x for vector weight) over the grid's
// annulus. Throws QuadratureError when the integrand is not finite at a node.
WeightedIntegral product_quadrature(const std::function<double(const Vector&)>& integrand,
                                    const QuadratureGrid& grid, WeightKind weight);

}  // namespace kin
