#pragma once

// Brute-force Hessian-measure oracle. For a weight g,
//   W(s) = int g(prox(f, s, z)) dz = sum_j s^j int g dPhi_j(f),
// so the Steiner coefficients of W are the weighted Hessian measures. W is
// sampled by stratified jittered Monte Carlo at a few step sizes with common
// random numbers and fitted by least squares.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kin/convexfn.hpp"
#include "kin/quadrature.hpp"
#include "kin/transforms.hpp"

namespace kin {

struct OracleSettings {
  std::vector<double> nodes{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  long points = 100000;  // total sample points, shared by all nodes
  int replicates = 8;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  ProxOptions prox{};
};

// g evaluated at a point; writes `width` values.
struct OracleWeight {
  std::function<void(const Vector& x, double* out)> eval;
  int width = 1;
  double support_radius = 1.0;  // g = 0 for |x| >= support_radius
};

struct SteinerEstimate {
  // coefficients[j][c] = int g_c dPhi_j(f), j = 0..n
  std::vector<std::vector<double>> coefficients;
  std::vector<std::vector<double>> standard_errors;
  long prox_evaluations = 0;
  long points = 0;
  double box_half_width = 0.0;
};

SteinerEstimate steiner_moments(const ConvexFunction& f, const OracleWeight& weight, const OracleSettings& settings);

// xi(|x|) (scalar) or xi(|x|) x (vector), restricted to |x| < region_radius.
// Several densities share one sampling pass; components are laid out
// density by density.
OracleWeight radial_weights(int n, const std::vector<RadialDensity>& densities, WeightKind kind,
                            std::optional<double> region_radius = std::nullopt);

// Phi_j(f, B) for the origin-centred ball of the given radius.
WeightedIntegral phi_region_oracle(const ConvexFunction& f, int j, double radius, const OracleSettings& settings);

// int xi(|x|) dPhi_j(f; x) or the x-weighted vector, over the region.
WeightedIntegral phi_weighted_oracle(const ConvexFunction& f, int j, const RadialDensity& xi, WeightKind kind,
                                     const OracleSettings& settings,
                                     std::optional<double> region_radius = std::nullopt);

// All j = 0..n for each density from one pass: result[d][j].
std::vector<std::vector<WeightedIntegral>> phi_weighted_oracle_all(const ConvexFunction& f,
                                                                   const std::vector<RadialDensity>& densities,
                                                                   WeightKind kind, const OracleSettings& settings,
                                                                   std::optional<double> region_radius = std::nullopt);

}  // namespace kin
