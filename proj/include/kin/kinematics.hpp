#pragma once

// Both sides of the additive kinematic formulas: the rotation-averaged
// Minkowski vector of u + v o R^-1 against the double Monge-Ampere integral
// with the kernel R_1^(n-k)(R^(-n+k) alpha)(max(|x|, |y|)), the closed form
// for (mu w_s, lambda v_t), the reduction for v a support function, the
// scalar formula and the classical formula for balls.

#include <cstdint>
#include <optional>
#include <string>

#include "kin/measures.hpp"
#include "kin/report.hpp"
#include "kin/transforms.hpp"
#include "kin/valuations.hpp"

namespace kin {

struct KinematicExperiment {
  int n = 2;
  int j = 1;
  RadialDensity alpha;
  ConvexFunction u;
  ConvexFunction v;
  int rotations = 200;
  QuadratureSettings quadrature{};
  OracleSettings oracle{};
  std::uint64_t seed = 1;
};

// Certifies alpha in T^n_n and the index range; throws on failure.
void validate(const KinematicExperiment& exp);

struct SideResult {
  WeightedIntegral value;
  double monte_carlo_stderr = 0.0;
  double quadrature_error = 0.0;
  long samples = 0;
  std::string notes;

  double combined_error() const;
};

SideResult lhs_vector(const KinematicExperiment& exp);
SideResult rhs_vector(const KinematicExperiment& exp);

SideResult lhs_scalar(const KinematicExperiment& exp);
SideResult rhs_scalar(const KinematicExperiment& exp);

// (1/n) kappa_(n-1) [mu^j s^(n-j+1) R^(-n+j) alpha(s)
//   + sum_{k=1}^{j-1} C(j,k) lambda^(j-k) mu^k s^(n-k+1) R^(-n+k) alpha(max(s,t))] e_n
// with alpha = C(n,j) R^(n-j) xi.
Vector z_closed_form(int n, int j, const RadialDensity& xi, double mu, double s, double lambda, double t);

// sum_{k=1}^{j} C(j,k) / C(n,j-k) kappa_(n-j+k) V_(j-k)(K) int alpha(|x|) x dMA_k(u; x)
WeightedIntegral corollary_rhs(int n, int j, const RadialDensity& alpha, const ConvexFunction& u, const Body& body,
                               const QuadratureSettings& settings = {});

// Coefficient of V_k(K) V_(j-k)(L) in the rotation average of V_j(K + R L).
double classical_coefficient(int n, int j, int k);
VerificationReport classical_balls(int n, int j, double r1, double r2);

VerificationReport scalar_kinematic(const KinematicExperiment& exp, double tolerance = 0.01);
VerificationReport main_theorem_report(const KinematicExperiment& exp, double tolerance = 0.03,
                                       double abs_floor = 1e-3);

}  // namespace kin
