#pragma once

// Flattened view of a ConvexFunction: nonnegative combinations and rotations
// expanded into radial, axial and segment atoms plus a linear part.

#include <variant>
#include <vector>

#include "kin/convexfn.hpp"

namespace kin::detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

enum class Profile { Quadratic, Quartic, Cone, Norm };

// coefficient * phi(|x - center|)
struct RadialAtom {
  Profile profile;
  double coefficient;
  double param;  // quadratic scale or cone radius
  Vector center;
};

// coefficient * w_s(frame^T x)
struct AxialAtom {
  double coefficient;
  double s;
  Matrix frame;
};

struct SegmentAtom {
  double coefficient;
  double half_length;
  Vector direction;
};

struct Flat {
  std::vector<RadialAtom> radial;
  std::vector<AxialAtom> axial;
  std::vector<SegmentAtom> segments;
  bool other = false;  // an atom without a reduction (ellipse)
  Vector linear;
};

inline void flatten(const ConvexFunction& f, double coef, const Matrix& rot, Flat& out) {
  if (coef == 0.0) {
    return;
  }
  std::visit(overloaded{[&](const Quadratic& a) {
                          out.radial.push_back({Profile::Quadratic, coef, a.scale, rot * a.center});
                        },
                        [&](const QuarticNorm& a) { out.radial.push_back({Profile::Quartic, coef, 0.0, rot * a.center}); },
                        [&](const Cone& a) {
                          out.radial.push_back({Profile::Cone, coef, a.t, Vector::Zero(rot.rows())});
                        },
                        [&](const HalfCone& a) { out.axial.push_back({coef, a.s, rot}); },
                        [&](const SupportBall& a) {
                          out.radial.push_back({Profile::Norm, coef * a.radius, 0.0, Vector::Zero(rot.rows())});
                          out.linear += coef * (rot * a.center);
                        },
                        [&](const SupportEllipse&) { out.other = true; },
                        [&](const Norm&) { out.radial.push_back({Profile::Norm, coef, 0.0, Vector::Zero(rot.rows())}); },
                        [&](const Affine& a) { out.linear += coef * (rot * a.slope); },
                        [&](const SupportSegment& a) {
                          out.segments.push_back({coef, a.half_length, rot * a.direction});
                          out.linear += coef * (rot * a.center);
                        },
                        [&](const NonnegCombination& a) {
                          for (const auto& t : a.terms) {
                            flatten(t.function, coef * t.coefficient, rot, out);
                          }
                        },
                        [&](const Rotated& a) { flatten(a.function, coef, rot * a.rotation.matrix(), out); }},
             f.variant());
}


// One-sided derivatives of the radial profile at rho >= 0.
inline double profile_right(const RadialAtom& a, double rho) {
  switch (a.profile) {
    case Profile::Quadratic:
      return a.coefficient * 2.0 * a.param * rho;
    case Profile::Quartic:
      return a.coefficient * 4.0 * rho * rho * rho;
    case Profile::Cone:
      return rho >= a.param ? a.coefficient : 0.0;
    case Profile::Norm:
      return a.coefficient;
  }
  return 0.0;
}

inline double profile_left(const RadialAtom& a, double rho) {
  if (a.profile == Profile::Cone) {
    return rho > a.param ? a.coefficient : 0.0;
  }
  if (a.profile == Profile::Norm && rho == 0.0) {
    return -a.coefficient;
  }
  return profile_right(a, rho);
}

// Second derivative away from kinks; 0 at the origin for Norm.
inline double profile_second(const RadialAtom& a, double rho) {
  switch (a.profile) {
    case Profile::Quadratic:
      return a.coefficient * 2.0 * a.param;
    case Profile::Quartic:
      return a.coefficient * 12.0 * rho * rho;
    case Profile::Cone:
    case Profile::Norm:
      return 0.0;
  }
  return 0.0;
}

inline Flat flatten(const ConvexFunction& f) {
  Flat out;
  out.linear = Vector::Zero(f.dim());
  flatten(f, 1.0, Matrix::Identity(f.dim(), f.dim()), out);
  return out;
}

}  // namespace kin::detail
