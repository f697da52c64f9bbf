#include "kin/convexfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kin {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(int n) {
  if (n < 1 || n > kMaxDim) {
    throw DomainError("ConvexFunction: dimension must be in 1..4");
  }
}

void require_same(int a, int b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": dimension mismatch");
  }
}

// (x_1, ..., x_{n-1}, max(x_n, 0))
Vector fold_last(const Vector& x) {
  Vector q = x;
  q(x.size() - 1) = std::max(x(x.size() - 1), 0.0);
  return q;
}

double norm_head(const Vector& x) { return x.head(x.size() - 1).norm(); }

Matrix radial_hessian(const Vector& x, double scale) {
  const int n = static_cast<int>(x.size());
  const double r = x.norm();
  const Vector u = x / r;
  return scale * (Matrix::Identity(n, n) - u * u.transpose()) / r;
}

Matrix matrix_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

ConvexFunction ConvexFunction::quadratic(const Vector& center, double scale) {
  require_dim(static_cast<int>(center.size()));
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw DomainError("quadratic: scale must be finite and nonnegative");
  }
  return ConvexFunction(std::make_shared<FunctionNode>(
      FunctionNode{static_cast<int>(center.size()), Quadratic{center, scale}}));
}

ConvexFunction ConvexFunction::quartic_norm(const Vector& center) {
  require_dim(static_cast<int>(center.size()));
  return ConvexFunction(
      std::make_shared<FunctionNode>(FunctionNode{static_cast<int>(center.size()), QuarticNorm{center}}));
}

ConvexFunction ConvexFunction::cone(int n, double t) {
  require_dim(n);
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError("cone: t must be positive");
  }
  return ConvexFunction(std::make_shared<FunctionNode>(FunctionNode{n, Cone{t}}));
}

ConvexFunction ConvexFunction::half_cone(int n, double s) {
  if (n < 2 || n > kMaxDim) {
    throw DomainError("half_cone: dimension must be in 2..4");
  }
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("half_cone: s must be positive");
  }
  return ConvexFunction(std::make_shared<FunctionNode>(FunctionNode{n, HalfCone{s}}));
}

ConvexFunction ConvexFunction::support_ball(double radius, const Vector& center) {
  require_dim(static_cast<int>(center.size()));
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw DomainError("support_ball: radius must be nonnegative");
  }
  return ConvexFunction(
      std::make_shared<FunctionNode>(FunctionNode{static_cast<int>(center.size()), SupportBall{radius, center}}));
}

ConvexFunction ConvexFunction::support_ellipse(const SymMatrix& shape) {
  const auto ev = shape.eigenvalues();
  if (*std::min_element(ev.begin(), ev.end()) <= 0.0) {
    throw DomainError("support_ellipse: matrix must be positive definite");
  }
  return ConvexFunction(
      std::make_shared<FunctionNode>(FunctionNode{shape.dim(), SupportEllipse{shape, matrix_sqrt(shape)}}));
}

ConvexFunction ConvexFunction::norm(int n) {
  require_dim(n);
  return ConvexFunction(std::make_shared<FunctionNode>(FunctionNode{n, Norm{}}));
}

ConvexFunction ConvexFunction::affine(const Vector& slope, double offset) {
  require_dim(static_cast<int>(slope.size()));
  return ConvexFunction(
      std::make_shared<FunctionNode>(FunctionNode{static_cast<int>(slope.size()), Affine{slope, offset}}));
}

ConvexFunction ConvexFunction::zero(int n) { return affine(Vector::Zero(n), 0.0); }

ConvexFunction ConvexFunction::support_segment(double half_length, const Vector& direction, const Vector& center) {
  require_dim(static_cast<int>(direction.size()));
  require_same(static_cast<int>(direction.size()), static_cast<int>(center.size()), "support_segment");
  if (!(half_length >= 0.0)) {
    throw DomainError("support_segment: half length must be nonnegative");
  }
  const double len = direction.norm();
  if (!(len > 0.0)) {
    throw DomainError("support_segment: direction must be nonzero");
  }
  return ConvexFunction(std::make_shared<FunctionNode>(
      FunctionNode{static_cast<int>(direction.size()), SupportSegment{half_length, direction / len, center}}));
}

ConvexFunction ConvexFunction::combination(std::vector<std::pair<double, ConvexFunction>> terms) {
  if (terms.empty()) {
    throw DomainError("combination: no terms");
  }
  const int n = terms.front().second.dim();
  NonnegCombination comb;
  for (auto& [c, f] : terms) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw DomainError("combination: coefficients must be finite and nonnegative");
    }
    require_same(n, f.dim(), "combination");
    comb.terms.push_back(Term{c, std::move(f)});
  }
  return ConvexFunction(std::make_shared<FunctionNode>(FunctionNode{n, std::move(comb)}));
}

int ConvexFunction::dim() const { return node_->n; }

const FunctionVariant& ConvexFunction::variant() const { return node_->variant; }

std::string ConvexFunction::name() const {
  return std::visit(overloaded{[](const Quadratic&) { return std::string("quadratic"); },
                               [](const QuarticNorm&) { return std::string("quartic_norm"); },
                               [](const Cone&) { return std::string("cone"); },
                               [](const HalfCone&) { return std::string("half_cone"); },
                               [](const SupportBall&) { return std::string("support_ball"); },
                               [](const SupportEllipse&) { return std::string("support_ellipse"); },
                               [](const Norm&) { return std::string("norm"); },
                               [](const Affine&) { return std::string("affine"); },
                               [](const SupportSegment&) { return std::string("support_segment"); },
                               [](const NonnegCombination&) { return std::string("combination"); },
                               [](const Rotated&) { return std::string("rotated"); }},
                    variant());
}

ConvexFunction ConvexFunction::rotated(const Rotation& rotation) const {
  require_same(dim(), rotation.dim(), "rotated");
  return ConvexFunction(std::make_shared<FunctionNode>(FunctionNode{dim(), Rotated{rotation, *this}}));
}

ConvexFunction ConvexFunction::operator+(const ConvexFunction& other) const {
  return combination({{1.0, *this}, {1.0, other}});
}

ConvexFunction operator*(double c, const ConvexFunction& f) { return ConvexFunction::combination({{c, f}}); }

// ---------------------------------------------------------------------------
// SubdiffSet

SubdiffSet::SubdiffSet(Block block) {
  dim_ = std::visit(overloaded{[](const Point& p) { return static_cast<int>(p.g.size()); },
                               [](const Segment& s) { return static_cast<int>(s.g0.size()); },
                               [](const ConvexHullOfPoints& h) {
                                 if (h.points.empty()) {
                                   throw DomainError("SubdiffSet: empty hull");
                                 }
                                 return static_cast<int>(h.points.front().size());
                               },
                               [](const Ball& b) { return static_cast<int>(b.center.size()); },
                               [](const Ellipsoid& e) { return static_cast<int>(e.center.size()); }},
                    block);
  blocks_.push_back(std::move(block));
  normalize();
}

SubdiffSet SubdiffSet::minkowski_sum(const std::vector<SubdiffSet>& parts) {
  if (parts.empty()) {
    throw DomainError("minkowski_sum: no parts");
  }
  SubdiffSet out;
  out.dim_ = parts.front().dim_;
  for (const auto& p : parts) {
    require_same(out.dim_, p.dim_, "minkowski_sum");
    out.blocks_.insert(out.blocks_.end(), p.blocks_.begin(), p.blocks_.end());
  }
  out.normalize();
  return out;
}

// Collapses all point blocks into a single translation, folded into the
// first non-point block when there is one.
void SubdiffSet::normalize() {
  Vector shift = Vector::Zero(dim_);
  std::vector<Block> rest;
  for (auto& b : blocks_) {
    if (auto* p = std::get_if<Point>(&b)) {
      shift += p->g;
    } else {
      rest.push_back(std::move(b));
    }
  }
  if (rest.empty()) {
    blocks_ = {Point{shift}};
    return;
  }
  std::visit(overloaded{[&](Point& p) { p.g += shift; },
                        [&](Segment& s) {
                          s.g0 += shift;
                          s.g1 += shift;
                        },
                        [&](ConvexHullOfPoints& h) {
                          for (auto& q : h.points) {
                            q += shift;
                          }
                        },
                        [&](Ball& b) { b.center += shift; }, [&](Ellipsoid& e) { e.center += shift; }},
             rest.front());
  blocks_ = std::move(rest);
}

bool SubdiffSet::is_point() const { return blocks_.size() == 1 && std::holds_alternative<Point>(blocks_.front()); }

Vector SubdiffSet::point() const {
  if (!is_point()) {
    throw DomainError("SubdiffSet: not a single point");
  }
  return std::get<Point>(blocks_.front()).g;
}

std::optional<SubdiffSet::Segment> SubdiffSet::as_segment() const {
  if (blocks_.size() == 1) {
    if (auto* s = std::get_if<Segment>(&blocks_.front())) {
      return *s;
    }
  }
  return std::nullopt;
}

namespace {

Vector nearest_in_block(const SubdiffSet::Block& block, const Vector& p) {
  return std::visit(
      overloaded{[&](const SubdiffSet::Point& b) -> Vector { return b.g; },
                 [&](const SubdiffSet::Segment& b) -> Vector {
                   const Vector d = b.g1 - b.g0;
                   const double dd = d.squaredNorm();
                   if (dd == 0.0) {
                     return b.g0;
                   }
                   const double tau = std::clamp((p - b.g0).dot(d) / dd, 0.0, 1.0);
                   return b.g0 + tau * d;
                 },
                 [&](const SubdiffSet::Ball& b) -> Vector {
                   const Vector d = p - b.center;
                   const double len = d.norm();
                   return len <= b.radius ? p : Vector(b.center + (b.radius / len) * d);
                 },
                 [&](const SubdiffSet::Ellipsoid& b) -> Vector {
                   // min |F u - w| subject to |u| <= 1, F symmetric PSD.
                   const Vector w = p - b.center;
                   Eigen::SelfAdjointEigenSolver<Matrix> es(b.factor);
                   const Vector lam = es.eigenvalues();
                   const Vector wq = es.eigenvectors().transpose() * w;
                   auto u_of = [&](double mu) {
                     Vector u(lam.size());
                     for (int i = 0; i < lam.size(); ++i) {
                       const double den = lam(i) * lam(i) + mu;
                       u(i) = den > 0.0 ? lam(i) * wq(i) / den : 0.0;
                     }
                     return u;
                   };
                   Vector u = u_of(0.0);
                   if (u.norm() > 1.0) {
                     double lo = 0.0;
                     double hi = 1.0;
                     while (u_of(hi).norm() > 1.0) {
                       hi *= 2.0;
                     }
                     for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                       const double mid = 0.5 * (lo + hi);
                       (u_of(mid).norm() > 1.0 ? lo : hi) = mid;
                     }
                     u = u_of(hi);
                   }
                   return b.center + es.eigenvectors() * (lam.asDiagonal() * u);
                 },
                 [&](const SubdiffSet::ConvexHullOfPoints& b) -> Vector {
                   // Frank-Wolfe with exact line search.
                   Vector y = b.points.front();
                   for (int it = 0; it < 2000; ++it) {
                     const Vector grad = y - p;
                     std::size_t best = 0;
                     double best_val = std::numeric_limits<double>::infinity();
                     for (std::size_t i = 0; i < b.points.size(); ++i) {
                       const double v = grad.dot(b.points[i]);
                       if (v < best_val) {
                         best_val = v;
                         best = i;
                       }
                     }
                     const Vector d = b.points[best] - y;
                     const double dd = d.squaredNorm();
                     if (dd == 0.0 || -grad.dot(d) <= 1e-16 * (1.0 + grad.norm())) {
                       break;
                     }
                     y += std::clamp(-grad.dot(d) / dd, 0.0, 1.0) * d;
                   }
                   return y;
                 }},
      block);
}

SubdiffSet::Block map_block(const SubdiffSet::Block& block, const Matrix& a, double c) {
  return std::visit(overloaded{[&](const SubdiffSet::Point& b) -> SubdiffSet::Block {
                                 return SubdiffSet::Point{c * (a * b.g)};
                               },
                               [&](const SubdiffSet::Segment& b) -> SubdiffSet::Block {
                                 return SubdiffSet::Segment{c * (a * b.g0), c * (a * b.g1)};
                               },
                               [&](const SubdiffSet::ConvexHullOfPoints& b) -> SubdiffSet::Block {
                                 SubdiffSet::ConvexHullOfPoints h;
                                 for (const auto& q : b.points) {
                                   h.points.push_back(c * (a * q));
                                 }
                                 return h;
                               },
                               [&](const SubdiffSet::Ball& b) -> SubdiffSet::Block {
                                 // Only orthogonal maps reach here, so balls stay balls.
                                 return SubdiffSet::Ball{c * (a * b.center), std::abs(c) * b.radius};
                               },
                               [&](const SubdiffSet::Ellipsoid& b) -> SubdiffSet::Block {
                                 Matrix f = c * (a * b.factor * a.transpose());
                                 return SubdiffSet::Ellipsoid{c * (a * b.center), f};
                               }},
                    block);
}

}  // namespace

Vector SubdiffSet::nearest(const Vector& p) const {
  require_same(dim_, static_cast<int>(p.size()), "SubdiffSet::nearest");
  if (blocks_.size() == 1) {
    return nearest_in_block(blocks_.front(), p);
  }
  // Block coordinate descent on |sum_i y_i - p|^2 with y_i in block i.
  std::vector<Vector> y;
  Vector total = Vector::Zero(dim_);
  for (const auto& b : blocks_) {
    y.push_back(nearest_in_block(b, Vector::Zero(dim_)));
    total += y.back();
  }
  for (int sweep = 0; sweep < 1000; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Vector target = p - (total - y[i]);
      const Vector yi = nearest_in_block(blocks_[i], target);
      moved = std::max(moved, (yi - y[i]).norm());
      total += yi - y[i];
      y[i] = yi;
    }
    if (moved <= 1e-15 * (1.0 + total.norm())) {
      break;
    }
  }
  return total;
}

SubdiffSet SubdiffSet::scaled(double c) const {
  SubdiffSet out;
  out.dim_ = dim_;
  const Matrix id = Matrix::Identity(dim_, dim_);
  for (const auto& b : blocks_) {
    out.blocks_.push_back(map_block(b, id, c));
  }
  out.normalize();
  return out;
}

SubdiffSet SubdiffSet::operator+(const SubdiffSet& other) const { return minkowski_sum({*this, other}); }

// ---------------------------------------------------------------------------
// evaluation

double eval(const ConvexFunction& f, const Vector& x) {
  require_same(f.dim(), static_cast<int>(x.size()), "eval");
  return std::visit(
      overloaded{[&](const Quadratic& a) { return a.scale * (x - a.center).squaredNorm(); },
                 [&](const QuarticNorm& a) {
                   const double r2 = (x - a.center).squaredNorm();
                   return r2 * r2;
                 },
                 [&](const Cone& a) {
                   const double r = x.norm();
                   return r <= a.t ? 0.0 : r - a.t;
                 },
                 [&](const HalfCone& a) {
                   const double r = x.norm();
                   const double rp = norm_head(x);
                   const double xn = x(x.size() - 1);
                   if (r <= a.s && xn >= 0.0) {
                     return 0.0;
                   }
                   if (rp <= a.s && xn < 0.0) {
                     return 0.0;
                   }
                   if (r > a.s && xn >= 0.0) {
                     return r - a.s;
                   }
                   return rp - a.s;
                 },
                 [&](const SupportBall& a) { return a.radius * x.norm() + a.center.dot(x); },
                 [&](const SupportEllipse& a) {
                   return std::sqrt(std::max(0.0, x.dot(a.shape.matrix() * x)));
                 },
                 [&](const Norm&) { return x.norm(); },
                 [&](const Affine& a) { return a.slope.dot(x) + a.offset; },
                 [&](const SupportSegment& a) {
                   return a.half_length * std::abs(a.direction.dot(x)) + a.center.dot(x);
                 },
                 [&](const NonnegCombination& a) {
                   double sum = 0.0;
                   for (const auto& t : a.terms) {
                     sum += t.coefficient * eval(t.function, x);
                   }
                   return sum;
                 },
                 [&](const Rotated& a) { return eval(a.function, a.rotation.apply_inverse(x)); }},
      f.variant());
}

double eval_sum_cases(double mu, double s, double lambda, double t, const Vector& x) {
  if (!(mu >= 0.0) || !(lambda >= 0.0) || !(s > 0.0) || !(t > 0.0)) {
    throw DomainError("eval_sum_cases: need mu, lambda >= 0 and s, t > 0");
  }
  if (x.size() < 2) {
    throw DomainError("eval_sum_cases: dimension must be at least 2");
  }
  const double r = x.norm();
  const double rp = norm_head(x);
  const bool upper = x(x.size() - 1) >= 0.0;
  if (s <= t) {
    if (upper) {
      if (r <= s) {
        return 0.0;
      }
      if (r <= t) {
        return mu * (r - s);
      }
      return mu * (r - s) + lambda * (r - t);
    }
    if (rp <= s) {
      return r <= t ? 0.0 : lambda * (r - t);
    }
    return r <= t ? mu * (rp - s) : mu * (rp - s) + lambda * (r - t);
  }
  if (upper) {
    if (r <= t) {
      return 0.0;
    }
    if (r <= s) {
      return lambda * (r - t);
    }
    return mu * (r - s) + lambda * (r - t);
  }
  if (r <= t) {
    return 0.0;
  }
  if (rp <= s) {
    return lambda * (r - t);
  }
  return mu * (rp - s) + lambda * (r - t);
}

Vector gradient(const ConvexFunction& f, const Vector& x) {
  require_same(f.dim(), static_cast<int>(x.size()), "gradient");
  const int n = f.dim();
  return std::visit(
      overloaded{[&](const Quadratic& a) -> Vector { return 2.0 * a.scale * (x - a.center); },
                 [&](const QuarticNorm& a) -> Vector {
                   const Vector z = x - a.center;
                   return 4.0 * z.squaredNorm() * z;
                 },
                 [&](const Cone& a) -> Vector {
                   const double r = x.norm();
                   if (r == a.t) {
                     throw NotDifferentiable("cone: gradient undefined on |x| = t");
                   }
                   return r < a.t ? Vector(Vector::Zero(n)) : Vector(x / r);
                 },
                 [&](const HalfCone& a) -> Vector {
                   const Vector q = fold_last(x);
                   const double psi = q.norm();
                   if (psi == a.s) {
                     throw NotDifferentiable("half_cone: gradient undefined on the singular set");
                   }
                   return psi < a.s ? Vector(Vector::Zero(n)) : Vector(q / psi);
                 },
                 [&](const SupportBall& a) -> Vector {
                   const double r = x.norm();
                   if (r == 0.0) {
                     if (a.radius == 0.0) {
                       return a.center;
                     }
                     throw NotDifferentiable("support_ball: gradient undefined at 0");
                   }
                   return a.radius * x / r + a.center;
                 },
                 [&](const SupportEllipse& a) -> Vector {
                   const Vector mx = a.shape.matrix() * x;
                   const double h = std::sqrt(std::max(0.0, x.dot(mx)));
                   if (h == 0.0) {
                     throw NotDifferentiable("support_ellipse: gradient undefined at 0");
                   }
                   return mx / h;
                 },
                 [&](const Norm&) -> Vector {
                   const double r = x.norm();
                   if (r == 0.0) {
                     throw NotDifferentiable("norm: gradient undefined at 0");
                   }
                   return x / r;
                 },
                 [&](const Affine& a) -> Vector { return a.slope; },
                 [&](const SupportSegment& a) -> Vector {
                   const double p = a.direction.dot(x);
                   if (p == 0.0 && a.half_length > 0.0) {
                     throw NotDifferentiable("support_segment: gradient undefined on the hyperplane");
                   }
                   return a.half_length * (p > 0.0 ? 1.0 : -1.0) * a.direction + a.center;
                 },
                 [&](const NonnegCombination& a) -> Vector {
                   Vector g = Vector::Zero(n);
                   for (const auto& t : a.terms) {
                     if (t.coefficient != 0.0) {
                       g += t.coefficient * gradient(t.function, x);
                     }
                   }
                   return g;
                 },
                 [&](const Rotated& a) -> Vector {
                   return a.rotation.apply(gradient(a.function, a.rotation.apply_inverse(x)));
                 }},
      f.variant());
}

SymMatrix hessian(const ConvexFunction& f, const Vector& x) {
  require_same(f.dim(), static_cast<int>(x.size()), "hessian");
  const int n = f.dim();
  const Matrix zero = Matrix::Zero(n, n);
  const Matrix m = std::visit(
      overloaded{[&](const Quadratic& a) -> Matrix { return 2.0 * a.scale * Matrix::Identity(n, n); },
                 [&](const QuarticNorm& a) -> Matrix {
                   const Vector z = x - a.center;
                   return 4.0 * z.squaredNorm() * Matrix::Identity(n, n) + 8.0 * z * z.transpose();
                 },
                 [&](const Cone& a) -> Matrix {
                   const double r = x.norm();
                   if (r == a.t) {
                     throw NotTwiceDifferentiable("cone: hessian undefined on |x| = t");
                   }
                   return r < a.t ? zero : radial_hessian(x, 1.0);
                 },
                 [&](const HalfCone& a) -> Matrix {
                   const double xn = x(n - 1);
                   const double r = x.norm();
                   const double rp = norm_head(x);
                   if (xn > 0.0) {
                     if (r == a.s) {
                       throw NotTwiceDifferentiable("half_cone: hessian undefined on the upper sphere");
                     }
                     return r < a.s ? zero : radial_hessian(x, 1.0);
                   }
                   if (rp == a.s || (xn == 0.0 && rp > a.s)) {
                     throw NotTwiceDifferentiable("half_cone: hessian undefined on the singular set");
                   }
                   if (rp < a.s) {
                     return zero;
                   }
                   Matrix h = zero;
                   h.topLeftCorner(n - 1, n - 1) = radial_hessian(Vector(x.head(n - 1)), 1.0);
                   return h;
                 },
                 [&](const SupportBall& a) -> Matrix {
                   if (a.radius == 0.0) {
                     return zero;
                   }
                   if (x.norm() == 0.0) {
                     throw NotTwiceDifferentiable("support_ball: hessian undefined at 0");
                   }
                   return radial_hessian(x, a.radius);
                 },
                 [&](const SupportEllipse& a) -> Matrix {
                   const Vector mx = a.shape.matrix() * x;
                   const double h = std::sqrt(std::max(0.0, x.dot(mx)));
                   if (h == 0.0) {
                     throw NotTwiceDifferentiable("support_ellipse: hessian undefined at 0");
                   }
                   return (a.shape.matrix() - mx * mx.transpose() / (h * h)) / h;
                 },
                 [&](const Norm&) -> Matrix {
                   if (x.norm() == 0.0) {
                     throw NotTwiceDifferentiable("norm: hessian undefined at 0");
                   }
                   return radial_hessian(x, 1.0);
                 },
                 [&](const Affine&) -> Matrix { return zero; },
                 [&](const SupportSegment& a) -> Matrix {
                   if (a.direction.dot(x) == 0.0 && a.half_length > 0.0) {
                     throw NotTwiceDifferentiable("support_segment: hessian undefined on the hyperplane");
                   }
                   return zero;
                 },
                 [&](const NonnegCombination& a) -> Matrix {
                   Matrix h = zero;
                   for (const auto& t : a.terms) {
                     if (t.coefficient != 0.0) {
                       h += t.coefficient * hessian(t.function, x).matrix();
                     }
                   }
                   return h;
                 },
                 [&](const Rotated& a) -> Matrix {
                   const Matrix& r = a.rotation.matrix();
                   return r * hessian(a.function, a.rotation.apply_inverse(x)).matrix() * r.transpose();
                 }},
      f.variant());
  return SymMatrix(Matrix(0.5 * (m + m.transpose())));
}

namespace {

// Right derivative of max(0, psi - s) given psi and its one-sided derivative.
double hinge_derivative(double psi, double dpsi, double s) {
  if (psi > s) {
    return dpsi;
  }
  if (psi < s) {
    return 0.0;
  }
  return std::max(0.0, dpsi);
}

double norm_derivative(const Vector& x, const Vector& d) {
  const double r = x.norm();
  return r > 0.0 ? x.dot(d) / r : d.norm();
}

}  // namespace

double directional_derivative(const ConvexFunction& f, const Vector& x, const Vector& d) {
  require_same(f.dim(), static_cast<int>(x.size()), "directional_derivative");
  require_same(f.dim(), static_cast<int>(d.size()), "directional_derivative");
  const int n = f.dim();
  return std::visit(
      overloaded{[&](const Quadratic& a) { return 2.0 * a.scale * (x - a.center).dot(d); },
                 [&](const QuarticNorm& a) {
                   const Vector z = x - a.center;
                   return 4.0 * z.squaredNorm() * z.dot(d);
                 },
                 [&](const Cone& a) { return hinge_derivative(x.norm(), norm_derivative(x, d), a.t); },
                 [&](const HalfCone& a) {
                   const Vector q = fold_last(x);
                   Vector dq = d;
                   const double xn = x(n - 1);
                   dq(n - 1) = xn > 0.0 ? d(n - 1) : (xn == 0.0 ? std::max(d(n - 1), 0.0) : 0.0);
                   const double psi = q.norm();
                   const double dpsi = psi > 0.0 ? q.dot(dq) / psi : dq.norm();
                   return hinge_derivative(psi, dpsi, a.s);
                 },
                 [&](const SupportBall& a) { return a.radius * norm_derivative(x, d) + a.center.dot(d); },
                 [&](const SupportEllipse& a) {
                   const Vector mx = a.shape.matrix() * x;
                   const double h = std::sqrt(std::max(0.0, x.dot(mx)));
                   return h > 0.0 ? mx.dot(d) / h : std::sqrt(std::max(0.0, d.dot(a.shape.matrix() * d)));
                 },
                 [&](const Norm&) { return norm_derivative(x, d); },
                 [&](const Affine& a) { return a.slope.dot(d); },
                 [&](const SupportSegment& a) {
                   const double p = a.direction.dot(x);
                   const double q = a.direction.dot(d);
                   const double dabs = p > 0.0 ? q : (p < 0.0 ? -q : std::abs(q));
                   return a.half_length * dabs + a.center.dot(d);
                 },
                 [&](const NonnegCombination& a) {
                   double sum = 0.0;
                   for (const auto& t : a.terms) {
                     if (t.coefficient != 0.0) {
                       sum += t.coefficient * directional_derivative(t.function, x, d);
                     }
                   }
                   return sum;
                 },
                 [&](const Rotated& a) {
                   return directional_derivative(a.function, a.rotation.apply_inverse(x), a.rotation.apply_inverse(d));
                 }},
      f.variant());
}

namespace {

bool near(double a, double b, double snap) { return std::abs(a - b) <= snap * std::max(1.0, std::abs(b)); }

SubdiffSet point_set(const Vector& g) { return SubdiffSet(SubdiffSet::Point{g}); }

}  // namespace

SubdiffSet subdiff(const ConvexFunction& f, const Vector& x, double snap) {
  require_same(f.dim(), static_cast<int>(x.size()), "subdiff");
  const int n = f.dim();
  const Vector zero = Vector::Zero(n);
  return std::visit(
      overloaded{
          [&](const Quadratic&) { return point_set(gradient(f, x)); },
          [&](const QuarticNorm&) { return point_set(gradient(f, x)); },
          [&](const Cone& a) {
            const double r = x.norm();
            if (near(r, a.t, snap)) {
              return SubdiffSet(SubdiffSet::Segment{zero, x / r});
            }
            return point_set(r < a.t ? zero : Vector(x / r));
          },
          [&](const HalfCone& a) {
            const double xn = x(n - 1);
            const double band = snap * std::max(1.0, a.s);
            if (xn > band) {
              const double r = x.norm();
              if (near(r, a.s, snap)) {
                return SubdiffSet(SubdiffSet::Segment{zero, x / r});
              }
              return point_set(r < a.s ? zero : Vector(x / r));
            }
            Vector lateral = zero;
            const double rp = norm_head(x);
            if (rp > 0.0) {
              lateral.head(n - 1) = x.head(n - 1) / rp;
            }
            if (near(rp, a.s, snap)) {
              return SubdiffSet(SubdiffSet::Segment{zero, lateral});
            }
            if (rp < a.s) {
              return point_set(zero);
            }
            if (xn >= -band) {
              // C^1 across the plane x_n = 0 outside the cylinder.
              const Vector q = fold_last(x);
              return point_set(Vector(q / q.norm()));
            }
            return point_set(lateral);
          },
          [&](const SupportBall& a) {
            if (x.norm() <= snap) {
              return SubdiffSet(SubdiffSet::Ball{a.center, a.radius});
            }
            return point_set(a.radius * x / x.norm() + a.center);
          },
          [&](const SupportEllipse& a) {
            if (x.norm() <= snap) {
              return SubdiffSet(SubdiffSet::Ellipsoid{zero, a.root});
            }
            return point_set(gradient(f, x));
          },
          [&](const Norm&) {
            if (x.norm() <= snap) {
              return SubdiffSet(SubdiffSet::Ball{zero, 1.0});
            }
            return point_set(x / x.norm());
          },
          [&](const Affine& a) { return point_set(a.slope); },
          [&](const SupportSegment& a) {
            if (std::abs(a.direction.dot(x)) <= snap) {
              return SubdiffSet(SubdiffSet::Segment{Vector(a.center - a.half_length * a.direction),
                                                    Vector(a.center + a.half_length * a.direction)});
            }
            return point_set(gradient(f, x));
          },
          [&](const NonnegCombination& a) {
            std::vector<SubdiffSet> parts;
            for (const auto& t : a.terms) {
              if (t.coefficient != 0.0) {
                parts.push_back(subdiff(t.function, x, snap).scaled(t.coefficient));
              }
            }
            if (parts.empty()) {
              return point_set(zero);
            }
            return SubdiffSet::minkowski_sum(parts);
          },
          [&](const Rotated& a) {
            const SubdiffSet inner = subdiff(a.function, a.rotation.apply_inverse(x), snap);
            std::vector<SubdiffSet> parts;
            for (const auto& b : inner.blocks()) {
              parts.push_back(SubdiffSet(map_block(b, a.rotation.matrix(), 1.0)));
            }
            return SubdiffSet::minkowski_sum(parts);
          }},
      f.variant());
}

double lipschitz_bound(const ConvexFunction& f, double radius) {
  return std::visit(
      overloaded{[&](const Quadratic& a) { return 2.0 * a.scale * (radius + a.center.norm()); },
                 [&](const QuarticNorm& a) { return 4.0 * std::pow(radius + a.center.norm(), 3); },
                 [&](const Cone&) { return 1.0; }, [&](const HalfCone&) { return 1.0; },
                 [&](const SupportBall& a) { return a.radius + a.center.norm(); },
                 [&](const SupportEllipse& a) {
                   const auto ev = a.shape.eigenvalues();
                   return std::sqrt(*std::max_element(ev.begin(), ev.end()));
                 },
                 [&](const Norm&) { return 1.0; }, [&](const Affine& a) { return a.slope.norm(); },
                 [&](const SupportSegment& a) { return a.half_length + a.center.norm(); },
                 [&](const NonnegCombination& a) {
                   double sum = 0.0;
                   for (const auto& t : a.terms) {
                     sum += t.coefficient * lipschitz_bound(t.function, radius);
                   }
                   return sum;
                 },
                 [&](const Rotated& a) { return lipschitz_bound(a.function, radius); }},
      f.variant());
}

bool is_rotation_invariant(const ConvexFunction& f) {
  return std::visit(overloaded{[](const Quadratic& a) { return a.center.norm() == 0.0 || a.scale == 0.0; },
                               [](const QuarticNorm& a) { return a.center.norm() == 0.0; },
                               [](const Cone&) { return true; }, [](const HalfCone&) { return false; },
                               [](const SupportBall& a) { return a.center.norm() == 0.0; },
                               [](const SupportEllipse& a) {
                                 const auto ev = a.shape.eigenvalues();
                                 return ev.front() == ev.back();
                               },
                               [](const Norm&) { return true; },
                               [](const Affine& a) { return a.slope.norm() == 0.0; },
                               [](const SupportSegment& a) {
                                 return a.half_length == 0.0 && a.center.norm() == 0.0;
                               },
                               [](const NonnegCombination& a) {
                                 return std::all_of(a.terms.begin(), a.terms.end(), [](const Term& t) {
                                   return t.coefficient == 0.0 || is_rotation_invariant(t.function);
                                 });
                               },
                               [](const Rotated& a) { return is_rotation_invariant(a.function); }},
                    f.variant());
}

std::vector<double> singular_radii(const ConvexFunction& f) {
  std::vector<double> out;
  std::visit(overloaded{[&](const Cone& a) { out.push_back(a.t); }, [&](const HalfCone& a) { out.push_back(a.s); },
                        [&](const NonnegCombination& a) {
                          for (const auto& t : a.terms) {
                            const auto r = singular_radii(t.function);
                            out.insert(out.end(), r.begin(), r.end());
                          }
                        },
                        [&](const Rotated& a) { out = singular_radii(a.function); }, [](const auto&) {}},
             f.variant());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace kin
