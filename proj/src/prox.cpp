#include <algorithm>
#include <cmath>
#include <limits>

#include "kin/convexfn.hpp"
#include "flat.hpp"

namespace kin {

namespace {

using namespace detail;

// Smallest x in [lo, hi] with phi(x) >= 0 for a nondecreasing,
// right-continuous phi with phi(lo) < 0 <= phi(hi). Regula falsi with the
// Illinois modification, falling back to bisection when the secant step
// stalls. Returns the final bracket.
template <class F>
std::pair<double, double> monotone_root(F&& phi, double lo, double hi, double flo, double fhi, double tol,
                                        int max_iter) {
  int side = 0;
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    double x = lo - flo * (hi - lo) / (fhi - flo);
    const double width = hi - lo;
    if (!(x > lo + 0.01 * width && x < hi - 0.01 * width) || it % 4 == 3) {
      x = 0.5 * (lo + hi);
    }
    if (!(x > lo && x < hi)) {
      break;
    }
    const double fx = phi(x);
    if (fx >= 0.0) {
      hi = x;
      fhi = fx;
      if (side == 1) {
        flo *= 0.5;
      }
      side = 1;
    } else {
      lo = x;
      flo = fx;
      if (side == -1) {
        fhi *= 0.5;
      }
      side = -1;
    }
  }
  return {lo, hi};
}

}  // namespace

struct ProxOperator::Plan {
  enum class Kind { Linear, Radial, Axial, Segment, Generic } kind = Kind::Generic;
  int n = 0;
  Flat flat;
  Vector center;
  std::vector<double> kinks;  // radial kink radii, sorted
  Matrix frame;
  double segment_total = 0.0;
  Vector segment_direction;

  // ---- radial reduction ----
  double radial_right(double rho) const {
    double d = 0.0;
    for (const auto& a : flat.radial) {
      d += profile_right(a, rho);
    }
    return d;
  }
  double radial_left(double rho) const {
    double d = 0.0;
    for (const auto& a : flat.radial) {
      d += profile_left(a, rho);
    }
    return d;
  }

  double radial_solve(double step, double rz, double tol, int max_iter) const {
    if (step * radial_right(0.0) - rz >= 0.0) {
      return 0.0;
    }
    if (radial_left(rz) <= 0.0 && radial_right(rz) >= 0.0) {
      return rz;
    }
    for (double t : kinks) {
      if (t > 0.0 && t < rz && step * radial_left(t) + t - rz <= 0.0 && step * radial_right(t) + t - rz >= 0.0) {
        return t;
      }
    }
    auto phi = [&](double rho) { return step * radial_right(rho) + rho - rz; };
    const auto [lo, hi] = monotone_root(phi, 0.0, rz, phi(0.0), phi(rz), tol * std::max(1.0, rz), 8 * max_iter);
    return 0.5 * (lo + hi);
  }

  // ---- axial reduction (plane spanned by the lateral direction and e_n) ----
  // One-sided derivative of g(c, h) in direction (dc, dh).
  // Atoms whose kink circle has radius `skip` are left out.
  double planar_derivative(double c, double h, double dc, double dh, double skip = -1.0) const {
    double sum = 0.0;
    const double r = std::hypot(c, h);
    const double dr = r > 0.0 ? (c * dc + h * dh) / r : std::hypot(dc, dh);
    for (const auto& a : flat.radial) {
      if (a.profile == Profile::Cone && a.param == skip) {
        continue;
      }
      sum += dr >= 0.0 ? profile_right(a, r) * dr : profile_left(a, r) * dr;
    }
    const double hp = std::max(h, 0.0);
    const double dhp = h > 0.0 ? dh : (h == 0.0 ? std::max(dh, 0.0) : 0.0);
    const double psi = std::hypot(c, hp);
    const double dpsi = psi > 0.0 ? (c * dc + hp * dhp) / psi : std::hypot(dc, dhp);
    for (const auto& a : flat.axial) {
      if (a.s == skip && h > 0.0) {
        continue;
      }
      const double d = psi > a.s ? dpsi : (psi < a.s ? 0.0 : std::max(0.0, dpsi));
      sum += a.coefficient * d;
    }
    return sum;
  }

  Vector axial_solve(double step, const Vector& y, double tol, int max_iter) const {
    Vector lateral = y.head(n - 1);
    const double zc = lateral.norm();
    const double zh = y(n - 1);
    if (zc > 0.0) {
      lateral /= zc;
    } else {
      lateral = unit_vector(n - 1, 0);
    }
    const double scale = std::max(1.0, std::hypot(zc, zh));
    const double eps = tol * scale;

    // F(c, h) = step g(c, h) + ((c - zc)^2 + (h - zh)^2) / 2
    auto dF = [&](double c, double h, double dc, double dh) {
      return step * planar_derivative(c, h, dc, dh) + (c - zc) * dc + (h - zh) * dh;
    };

    // Inner minimization in h; g(c, .) is smallest at h = 0, so the
    // minimizer lies between 0 and zh.
    auto inner = [&](double c) -> std::pair<double, double> {
      const double lo = std::min(0.0, zh);
      const double hi = std::max(0.0, zh);
      auto phi = [&](double h) { return dF(c, h, 0.0, 1.0); };
      const double flo = phi(lo);
      if (flo >= 0.0) {
        return {lo, lo};
      }
      const double fhi = phi(hi);
      if (fhi < 0.0) {
        return {hi, hi};
      }
      // Kinks of g along the vertical line through c.
      double cand[32];
      int nc = 0;
      cand[nc++] = 0.0;
      for (const auto& a : flat.axial) {
        if (c < a.s) {
          cand[nc++] = std::sqrt(a.s * a.s - c * c);
        }
      }
      for (const auto& a : flat.radial) {
        if (a.profile == Profile::Cone && c < a.param) {
          const double hk = std::sqrt(a.param * a.param - c * c);
          cand[nc++] = hk;
          cand[nc++] = -hk;
        }
      }
      for (int i = 0; i < nc; ++i) {
        const double hk = cand[i];
        if (hk > lo && hk < hi && -dF(c, hk, 0.0, -1.0) <= 0.0 && dF(c, hk, 0.0, 1.0) >= 0.0) {
          return {hk, hk};
        }
      }
      return monotone_root(phi, lo, hi, flo, fhi, eps, 8 * max_iter);
    };

    // Right derivative of G(c) = min_h F(c, h), from the one-sided partial
    // derivatives at the ends of the inner bracket.
    auto outer_derivative = [&](double c) {
      auto [h0, h1] = inner(c);
      if (h1 - h0 < 1e-3 * eps) {
        const double pad = 1e-9 * scale;
        h0 -= pad;
        h1 += pad;
      }
      const double gh0 = dF(c, h0, 0.0, 1.0);
      const double gh1 = dF(c, h1, 0.0, 1.0);
      const double gc0 = dF(c, h0, 1.0, 0.0);
      const double gc1 = dF(c, h1, 1.0, 0.0);
      double tau = 0.5;
      if (gh1 - gh0 > 0.0) {
        tau = std::clamp(-gh0 / (gh1 - gh0), 0.0, 1.0);
      }
      return (1.0 - tau) * gc0 + tau * gc1;
    };

    double c_star = 0.0;
    const double g0 = outer_derivative(0.0);
    if (g0 < 0.0 && zc > 0.0) {
      const double g1 = outer_derivative(zc);
      if (g1 < 0.0) {
        c_star = zc;
      } else {
        const auto [lo, hi] = monotone_root(outer_derivative, 0.0, zc, g0, g1, eps, 8 * max_iter);
        c_star = 0.5 * (lo + hi);
        // The lateral cylinders are vertical kink lines: snap onto them.
        for (const auto& a : flat.axial) {
          if (a.s >= lo - 2.0 * eps && a.s <= hi + 2.0 * eps) {
            c_star = a.s;
          }
        }
      }
    }
    const auto [h0, h1] = inner(c_star);
    double h_star = 0.5 * (h0 + h1);
    polish_on_circle(step, zc, zh, scale, c_star, h_star);
    Vector x(n);
    x.head(n - 1) = c_star * lateral;
    x(n - 1) = h_star;
    return x;
  }

  // Near the rim of a kink circle the nested solve loses accuracy in h,
  // since the kink height moves much faster than c there. If the point is
  // close to a circle, solve along that circle and keep the result when its
  // normal multiplier lies in the subdifferential range.
  void polish_on_circle(double step, double zc, double zh, double scale, double& c, double& h) const {
    const double r = std::hypot(c, h);
    double rho = -1.0;
    double weight = 0.0;
    for (const auto& a : flat.radial) {
      if (a.profile == Profile::Cone && std::abs(r - a.param) <= 1e-6 * scale) {
        rho = a.param;
      }
    }
    for (const auto& a : flat.axial) {
      if (h > 0.0 && std::abs(r - a.s) <= 1e-6 * scale) {
        rho = a.s;
      }
    }
    if (rho <= 0.0) {
      return;
    }
    for (const auto& a : flat.radial) {
      if (a.profile == Profile::Cone && a.param == rho) {
        weight += a.coefficient;
      }
    }
    for (const auto& a : flat.axial) {
      if (a.s == rho) {
        weight += a.coefficient;
      }
    }
    auto tangential = [&](double theta) {
      const double pc = rho * std::cos(theta);
      const double ph = rho * std::sin(theta);
      const double tc = -std::sin(theta);
      const double th = std::cos(theta);
      return step * planar_derivative(pc, ph, tc, th, rho) + (pc - zc) * tc + (ph - zh) * th;
    };
    const double theta0 = std::atan2(h, c);
    double delta = 1e-6;
    double lo = theta0 - delta;
    double hi = theta0 + delta;
    double flo = tangential(lo);
    double fhi = tangential(hi);
    while ((flo >= 0.0 || fhi < 0.0) && delta < 1e-2) {
      delta *= 4.0;
      lo = theta0 - delta;
      hi = theta0 + delta;
      flo = tangential(lo);
      fhi = tangential(hi);
    }
    if (flo >= 0.0 || fhi < 0.0) {
      return;
    }
    const auto [a, b] = monotone_root(tangential, lo, hi, flo, fhi, 1e-15, 400);
    const double theta = 0.5 * (a + b);
    const double pc = rho * std::cos(theta);
    const double ph = rho * std::sin(theta);
    if (pc < 0.0) {
      return;
    }
    // residual = (z - p) - step * (gradient of the remaining atoms)
    const double gc = step * planar_derivative(pc, ph, 1.0, 0.0, rho);
    const double gh = step * planar_derivative(pc, ph, 0.0, 1.0, rho);
    const double rc = zc - pc - gc;
    const double rh = zh - ph - gh;
    const double normal = (rc * pc + rh * ph) / rho;
    const double off = std::abs(rh * pc - rc * ph) / rho;
    const double slack = 1e-9 * scale;
    if (off <= slack && normal >= -slack && normal <= step * weight + slack) {
      c = pc;
      h = ph;
    }
  }

  Vector generic_solve(const ConvexFunction& f, double step, const Vector& z, const ProxOptions& opt) const {
    Vector x = z;
    auto objective = [&](const Vector& p) { return step * eval(f, p) + 0.5 * (p - z).squaredNorm(); };
    double fx = objective(x);
    const double scale = std::max(1.0, z.norm());
    for (int it = 0; it < 50 * opt.max_iter; ++it) {
      const double snap = 1e-9;
      const SubdiffSet g = subdiff(f, x, snap).scaled(step) + SubdiffSet(SubdiffSet::Point{Vector(x - z)});
      const Vector d = g.min_norm_element();
      const double gn = d.norm();
      if (gn <= opt.tol * scale) {
        return x;
      }
      double tau = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector trial = x - tau * d;
        const double ft = objective(trial);
        if (ft <= fx - 0.25 * tau * gn * gn) {
          x = trial;
          fx = ft;
          moved = true;
          break;
        }
        tau *= 0.5;
      }
      if (!moved) {
        break;
      }
    }
    const double resid =
        (subdiff(f, x, 1e-7).scaled(step) + SubdiffSet(SubdiffSet::Point{Vector(x - z)})).min_norm_element().norm();
    if (resid > 1e3 * opt.tol * scale) {
      throw NonConvergence("prox: subgradient descent residual " + std::to_string(resid) + " at z=(" + std::to_string(z(0)) + "," + std::to_string(z(z.size()-1)) + ") x=(" + std::to_string(x(0)) + "," + std::to_string(x(x.size()-1)) + ")" + " above tolerance");
    }
    return x;
  }
};

ProxOperator::ProxOperator(const ConvexFunction& f, ProxOptions options)
    : f_(f), options_(options), plan_(std::make_unique<Plan>()) {
  if (!(options_.tol > 0.0) || options_.max_iter < 1) {
    throw DomainError("prox: tolerance and iteration cap must be positive");
  }
  Plan& p = *plan_;
  p.n = f.dim();
  p.flat.linear = Vector::Zero(p.n);
  flatten(f, 1.0, Matrix::Identity(p.n, p.n), p.flat);
  const Flat& fl = p.flat;

  const bool no_other = !fl.other;
  if (fl.radial.empty() && fl.axial.empty() && fl.segments.empty() && no_other) {
    p.kind = Plan::Kind::Linear;
    return;
  }
  if (no_other && fl.axial.empty() && fl.segments.empty()) {
    const Vector c = fl.radial.front().center;
    const bool common = std::all_of(fl.radial.begin(), fl.radial.end(),
                                    [&](const RadialAtom& a) { return (a.center - c).norm() <= 1e-14 * (1.0 + c.norm()); });
    if (common) {
      p.kind = Plan::Kind::Radial;
      p.center = c;
      for (const auto& a : fl.radial) {
        if (a.profile == Profile::Cone) {
          p.kinks.push_back(a.param);
        }
      }
      std::sort(p.kinks.begin(), p.kinks.end());
      return;
    }
  }
  if (no_other && !fl.axial.empty() && fl.segments.empty()) {
    const Matrix& frame = fl.axial.front().frame;
    const bool same_frame = std::all_of(fl.axial.begin(), fl.axial.end(), [&](const AxialAtom& a) {
      return (a.frame - frame).cwiseAbs().maxCoeff() <= 1e-12;
    });
    const bool centred = std::all_of(fl.radial.begin(), fl.radial.end(),
                                     [](const RadialAtom& a) { return a.center.norm() == 0.0; });
    if (same_frame && centred && fl.radial.size() + fl.axial.size() <= 8) {
      p.kind = Plan::Kind::Axial;
      p.frame = frame;
      return;
    }
  }
  if (no_other && fl.radial.empty() && fl.axial.empty() && !fl.segments.empty()) {
    const Vector d = fl.segments.front().direction;
    double total = 0.0;
    bool parallel = true;
    for (const auto& s : fl.segments) {
      const double c = s.direction.dot(d);
      parallel = parallel && std::abs(std::abs(c) - 1.0) <= 1e-12;
      total += s.coefficient * s.half_length;
    }
    if (parallel) {
      p.kind = Plan::Kind::Segment;
      p.segment_total = total;
      p.segment_direction = d;
      return;
    }
  }
  p.kind = Plan::Kind::Generic;
}

ProxOperator::~ProxOperator() = default;
ProxOperator::ProxOperator(ProxOperator&&) noexcept = default;
ProxOperator& ProxOperator::operator=(ProxOperator&&) noexcept = default;

std::string ProxOperator::strategy() const {
  switch (plan_->kind) {
    case Plan::Kind::Linear:
    case Plan::Kind::Radial:
      return "radial";
    case Plan::Kind::Axial:
      return "axial";
    case Plan::Kind::Segment:
      return "segment";
    case Plan::Kind::Generic:
      return "generic";
  }
  return "generic";
}

Vector ProxOperator::operator()(double step, const Vector& z) const {
  const Plan& p = *plan_;
  if (static_cast<int>(z.size()) != p.n) {
    throw DomainError("prox: dimension mismatch");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw DomainError("prox: step must be positive");
  }
  const Vector w = z - step * p.flat.linear;
  Vector x;
  switch (p.kind) {
    case Plan::Kind::Linear:
      x = w;
      break;
    case Plan::Kind::Radial: {
      const Vector v = w - p.center;
      const double rz = v.norm();
      if (rz == 0.0) {
        x = p.center;
        break;
      }
      const double rho = p.radial_solve(step, rz, options_.tol, options_.max_iter);
      x = p.center + (rho / rz) * v;
      break;
    }
    case Plan::Kind::Axial: {
      const Vector y = p.frame.transpose() * w;
      x = p.frame * p.axial_solve(step, y, options_.tol, options_.max_iter);
      break;
    }
    case Plan::Kind::Segment: {
      const double u = p.segment_direction.dot(w);
      const double shrunk = std::copysign(std::max(std::abs(u) - step * p.segment_total, 0.0), u);
      x = w + (shrunk - u) * p.segment_direction;
      break;
    }
    case Plan::Kind::Generic:
      return p.generic_solve(f_, step, z, options_);
  }
  if (options_.verify) {
    const double scale = std::max(1.0, z.norm());
    const SubdiffSet sd = subdiff(f_, x, 1e-8).scaled(step);
    const double resid = sd.distance(Vector(z - x));
    if (resid > 1e3 * options_.tol * scale) {
      throw NonConvergence("prox: optimality residual " + std::to_string(resid) + " at z=(" + std::to_string(z(0)) + "," + std::to_string(z(z.size()-1)) + ") x=(" + std::to_string(x(0)) + "," + std::to_string(x(x.size()-1)) + ")" + " above tolerance");
    }
  }
  return x;
}

Vector prox(const ConvexFunction& f, double step, const Vector& z, const ProxOptions& options) {
  return ProxOperator(f, options)(step, z);
}

}  // namespace kin
