#pragma once

// Weighted integrals against the Hessian measures Phi_j(f; .) and the
// Monge-Ampere measures MA_j(f; .) = MA(f[j], |.|[n-j]; .).
//
// Routes:
//   smooth quadrature  C^2 functions away from the origin, density
//                      [Hess f]_j resp. D(Hess f[j], Hess|x|[n-j]);
//   closed form        radial functions (one-dimensional marginals, kink
//                      masses and origin atoms) and the x-weighted
//                      integrals of mu * w_s;
//   oracle             the prox/Steiner estimate for everything else.
// MA_j integrals are also available through the density transform
// alpha -> xi = R^(-(n-j)) alpha / C(n, j) and any Phi_j route.

#include <optional>
#include <variant>
#include <vector>

#include "kin/convexfn.hpp"
#include "kin/oracle.hpp"
#include "kin/quadrature.hpp"
#include "kin/transforms.hpp"

namespace kin {

struct MeasureQuery {
  ConvexFunction function;
  int j = 0;
  RadialDensity density;
  WeightKind weight = WeightKind::Scalar;
  std::optional<double> region_radius;  // origin-centred ball; default: density support
  QuadratureSettings settings{};
};

enum class Route { Auto, SmoothQuadrature, ClosedForm, Oracle };

const char* to_string(Route r);

// C^2 on R^n minus the origin.
bool smooth_off_origin(const ConvexFunction& f);
// f = phi(|x|) + affine.
bool radially_reducible(const ConvexFunction& f);
// f = mu * w_s in some frame, plus affine.
bool axially_reducible(const ConvexFunction& f);

WeightedIntegral phi_integral_smooth(const MeasureQuery& q);
WeightedIntegral phi_integral_closed(const MeasureQuery& q);
// Best available Phi route; the oracle settings are used only by the oracle.
WeightedIntegral phi_integral(const MeasureQuery& q, Route route = Route::Auto, const OracleSettings& oracle = {});

WeightedIntegral ma_j_smooth(const MeasureQuery& q);
WeightedIntegral ma_j_closed(const MeasureQuery& q);
WeightedIntegral ma_j_transform(const MeasureQuery& q, Route phi_route = Route::Auto,
                                const OracleSettings& oracle = {});

struct RouteComparison {
  WeightedIntegral direct;
  WeightedIntegral transform;
  double relative_difference = 0.0;
};

// Both MA routes on one query; throws RouteMismatch above 1% relative
// difference (with an absolute floor for vanishing vectors).
RouteComparison ma_j_routes(const MeasureQuery& q, double tolerance = 0.01);

// Dispatches to the best route and cross-checks whenever two independent
// deterministic routes exist.
WeightedIntegral ma_j_integral(const MeasureQuery& q, const OracleSettings& oracle = {});

WeightedIntegral ma0_integral(int n, const RadialDensity& alpha, WeightKind weight,
                              std::optional<double> region_radius = std::nullopt);

struct BallBody {
  double radius = 1.0;
};
struct EllipseBody {
  SymMatrix shape;  // body M^(1/2) B^2
};
struct SegmentBody {
  double length = 1.0;
};
using Body = std::variant<BallBody, EllipseBody, SegmentBody>;

double intrinsic_volume(const Body& body, int n, int j);
// Total mass of MA_j(h_K; .), an atom at the origin.
double ma_support_mass(const Body& body, int n, int j);

// Radial marginal of MA_i(f; .) for radially reducible or C^2 functions:
// atoms (radius, mass) and a density in r on (0, outer).
struct RadialMarginal {
  std::vector<std::pair<double, double>> atoms;
  std::function<double(double)> density;
  std::vector<double> kinks;
  double outer = 0.0;
  bool has_density = true;  // false when the measure is purely atomic
};

RadialMarginal ma_radial_marginal(const ConvexFunction& f, int i, double outer,
                                  const QuadratureSettings& settings = {});

}  // namespace kin
