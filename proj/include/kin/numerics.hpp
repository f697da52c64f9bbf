#pragma once

// Small dense linear algebra (n <= 4), elementary symmetric functions,
// mixed discriminants, Haar sampling on SO(n), Steiner polynomial fits,
// Gauss-Legendre rules and the counter-based random stream used by every
// Monte Carlo estimate in the library.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kin/error.hpp"

namespace kin {

inline constexpr int kMaxDim = 4;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kPi = 3.14159265358979323846;

// Volume of the m-dimensional unit ball (kappa_0 = 1).
double kappa(int m);
// (n-1)-dimensional measure of the unit sphere in R^n, equal to n * kappa(n).
double omega(int n);
double binom(int n, int k);

Vector unit_vector(int n, int axis);

// Real symmetric n x n matrix, 1 <= n <= 4. Construction rejects input whose
// asymmetry exceeds 1e-12 relative to its largest entry and stores the
// symmetrized matrix.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int n);
  static SymMatrix zero(int n);
  static SymMatrix diagonal(std::span<const double> entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  std::vector<double> eigenvalues() const;

  SymMatrix operator+(const SymMatrix& other) const;
  SymMatrix operator*(double c) const;

 private:
  struct Unchecked {};
  SymMatrix(const Matrix& m, Unchecked) : m_(m) {}

  Matrix m_;
};

// Special orthogonal n x n matrix; construction checks orthogonality and
// det = +1 within 1e-10.
class Rotation {
 public:
  explicit Rotation(const Matrix& m);

  static Rotation identity(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

  Vector apply(const Vector& x) const { return m_ * x; }
  Vector apply_inverse(const Vector& x) const { return m_.transpose() * x; }
  Rotation inverse() const;
  Rotation operator*(const Rotation& other) const;

 private:
  Matrix m_;
};

// [A]_j: sum of all j-fold products of the given eigenvalues; [A]_0 = 1.
double elem_sym(std::span<const double> eigenvalues, int j);
// Same quantity computed from the matrix directly (sum of principal j x j
// minors), without an eigen-decomposition.
double elem_sym(const SymMatrix& a, int j);

// D(A[j], B[n-j]), normalized so that
//   det(sA + tB) = sum_j C(n,j) D(A[j],B[n-j]) s^j t^(n-j).
// Coefficients are extracted from det(sA + tB) sampled at n+1 Chebyshev
// nodes on the segment s + t = 1.
double mixed_det_two(const SymMatrix& a, const SymMatrix& b, int j);

// Counter-based random stream. Stream `stream` of master seed `seed` is a
// pure function of the pair and the draw index, so any Monte Carlo result is
// reproducible from (seed, stream, sample counts) alone and independent of
// the order in which streams are consumed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();

  // Independent child stream; children of equal (parent, index) coincide.
  CounterRng split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Haar-distributed element of SO(n): QR of a Gaussian matrix, signs of R's
// diagonal moved into Q, then one column flipped if det = -1.
Rotation haar_rotation(int n, CounterRng& rng);

// Least-squares coefficients (c_0..c_degree) of sum_j c_j s^j through the
// samples (s, value). Requires at least degree+1 distinct positive nodes.
std::vector<double> steiner_fit(std::span<const std::pair<double, double>> samples, int degree);

// Reusable factorization for fitting many value columns against one node set.
class SteinerFitter {
 public:
  SteinerFitter(std::span<const double> nodes, int degree);

  int degree() const { return degree_; }
  const std::vector<double>& nodes() const { return nodes_; }

  // values.size() == nodes().size()
  std::vector<double> fit(std::span<const double> values) const;
  // Linear map from node values to coefficient `index`; lets callers
  // propagate per-node variances.
  std::vector<double> coefficient_functional(int index) const;

 private:
  std::vector<double> nodes_;
  int degree_;
  Eigen::MatrixXd pseudo_inverse_;
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached Gauss-Legendre rule of the given order (Newton iteration on the
// three-term recurrence).
const GaussRule& gauss_legendre(int order);

// Composite Gauss-Legendre integral of f over [a, b]. The interval is split
// at every breakpoint inside (a, b); pieces whose ratio b/a is large are
// graded geometrically toward their left end so that integrands with
// algebraic or logarithmic behaviour at 0 are resolved.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints = {}, int order = 20);

}  // namespace kin
