#pragma once

// Finite convex functions on R^n used by the verification suites: smooth
// analytic forms, the cone functions v_t and w_s, support functions of balls,
// ellipses and segments, nonnegative combinations and rotations.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kin/numerics.hpp"

namespace kin {

// x -> scale * |x - center|^2
struct Quadratic {
  Vector center;
  double scale = 0.5;
};

// x -> |x - center|^4
struct QuarticNorm {
  Vector center;
};

// x -> max(0, |x| - t)
struct Cone {
  double t = 1.0;
};

// x -> max(0, |x| - s) for x_n >= 0 and max(0, |x'| - s) for x_n < 0, where
// x' = (x_1, ..., x_{n-1}).
struct HalfCone {
  double s = 1.0;
};

// x -> radius * |x| + <x, center>, the support function of a ball.
struct SupportBall {
  double radius = 1.0;
  Vector center;
};

// x -> sqrt(x^T M x), the support function of the ellipse M^(1/2) B.
struct SupportEllipse {
  SymMatrix shape;
  Matrix root;  // M^(1/2)
};

// x -> |x|
struct Norm {};

// x -> <slope, x> + offset
struct Affine {
  Vector slope;
  double offset = 0.0;
};

// x -> half_length * |<x, direction>| + <x, center>, the support function of
// the segment [center - half_length d, center + half_length d].
struct SupportSegment {
  double half_length = 1.0;
  Vector direction;  // unit
  Vector center;
};

struct NonnegCombination;
struct Rotated;

using FunctionVariant = std::variant<Quadratic, QuarticNorm, Cone, HalfCone, SupportBall, SupportEllipse, Norm,
                                     Affine, SupportSegment, NonnegCombination, Rotated>;

struct FunctionNode;

// Immutable value handle; copies share the description.
class ConvexFunction {
 public:
  static ConvexFunction quadratic(const Vector& center, double scale);
  static ConvexFunction quartic_norm(const Vector& center);
  static ConvexFunction cone(int n, double t);
  static ConvexFunction half_cone(int n, double s);
  static ConvexFunction support_ball(double radius, const Vector& center);
  static ConvexFunction support_ellipse(const SymMatrix& shape);
  static ConvexFunction norm(int n);
  static ConvexFunction affine(const Vector& slope, double offset);
  static ConvexFunction zero(int n);
  static ConvexFunction support_segment(double half_length, const Vector& direction, const Vector& center);
  static ConvexFunction combination(std::vector<std::pair<double, ConvexFunction>> terms);

  int dim() const;
  const FunctionVariant& variant() const;
  std::string name() const;

  // x -> f(rotation^{-1} x)
  ConvexFunction rotated(const Rotation& rotation) const;

  ConvexFunction operator+(const ConvexFunction& other) const;
  friend ConvexFunction operator*(double c, const ConvexFunction& f);

 private:
  explicit ConvexFunction(std::shared_ptr<const FunctionNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const FunctionNode> node_;
};

struct Term {
  double coefficient;
  ConvexFunction function;
};

struct NonnegCombination {
  std::vector<Term> terms;
};

struct Rotated {
  Rotation rotation;
  ConvexFunction function;
};

struct FunctionNode {
  int n;
  FunctionVariant variant;
};

// Closed convex subset of R^n given as a Minkowski sum of simple blocks.
class SubdiffSet {
 public:
  struct Point {
    Vector g;
  };
  struct Segment {
    Vector g0, g1;
  };
  struct ConvexHullOfPoints {
    std::vector<Vector> points;
  };
  struct Ball {
    Vector center;
    double radius;
  };
  // center + factor * u, |u| <= 1
  struct Ellipsoid {
    Vector center;
    Matrix factor;
  };
  using Block = std::variant<Point, Segment, ConvexHullOfPoints, Ball, Ellipsoid>;

  explicit SubdiffSet(Block block);
  static SubdiffSet minkowski_sum(const std::vector<SubdiffSet>& parts);

  int dim() const { return dim_; }
  bool is_point() const;
  // Valid when is_point().
  Vector point() const;
  // Non-empty only when the set is a single segment (after collapsing points).
  std::optional<Segment> as_segment() const;
  const std::vector<Block>& blocks() const { return blocks_; }
  bool is_minkowski_sum() const { return blocks_.size() > 1; }

  Vector nearest(const Vector& p) const;
  double distance(const Vector& p) const { return (nearest(p) - p).norm(); }
  bool contains(const Vector& p, double tol) const { return distance(p) <= tol; }
  Vector min_norm_element() const { return nearest(Vector::Zero(dim_)); }

  SubdiffSet scaled(double c) const;
  SubdiffSet operator+(const SubdiffSet& other) const;

 private:
  SubdiffSet() = default;
  void normalize();

  int dim_ = 0;
  std::vector<Block> blocks_;
};

double eval(const ConvexFunction& f, const Vector& x);

// The piecewise table for mu w_s + lambda v_t, evaluated case by case.
double eval_sum_cases(double mu, double s, double lambda, double t, const Vector& x);

Vector gradient(const ConvexFunction& f, const Vector& x);
SymMatrix hessian(const ConvexFunction& f, const Vector& x);

// One-sided derivative lim_{h->0+} (f(x + h d) - f(x)) / h, exact.
double directional_derivative(const ConvexFunction& f, const Vector& x, const Vector& d);

// Points within `snap` (relative) of a singular set are treated as lying on
// it, which returns the full subdifferential there.
SubdiffSet subdiff(const ConvexFunction& f, const Vector& x, double snap = 0.0);

// Upper bound for the Lipschitz constant of f on the ball of the given radius.
double lipschitz_bound(const ConvexFunction& f, double radius);

// True if f(rotation x) = f(x) for all rotations (up to an additive constant
// being excluded: the function itself must be invariant).
bool is_rotation_invariant(const ConvexFunction& f);

// Radii of origin-centred spheres on which f fails to be C^2.
std::vector<double> singular_radii(const ConvexFunction& f);

struct ProxOptions {
  double tol = 1e-10;
  int max_iter = 200;
  bool verify = false;
};

// Proximal map z -> argmin_x step f(x) + |x - z|^2 / 2. The description is
// analysed once; calls are cheap and thread-safe.
class ProxOperator {
 public:
  explicit ProxOperator(const ConvexFunction& f, ProxOptions options = {});
  ~ProxOperator();
  ProxOperator(ProxOperator&&) noexcept;
  ProxOperator& operator=(ProxOperator&&) noexcept;

  Vector operator()(double step, const Vector& z) const;

  // "radial", "axial", "segment" or "generic"
  std::string strategy() const;

 private:
  struct Plan;
  ConvexFunction f_;
  ProxOptions options_;
  std::unique_ptr<Plan> plan_;
};

Vector prox(const ConvexFunction& f, double step, const Vector& z, const ProxOptions& options = {});

}  // namespace kin
