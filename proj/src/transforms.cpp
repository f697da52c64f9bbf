#include "kin/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kin {

std::string ClassTag::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Cb:
      os << "C_b";
      return os.str();
    case Kind::D:
      os << "D";
      break;
    case Kind::T:
      os << "T";
      break;
  }
  os << "^" << n << "_" << j;
  return os.str();
}

struct RadialDensity::Impl {
  virtual ~Impl() = default;
  virtual double eval(double r) const = 0;
  virtual double tail(double s, int k) const = 0;
  virtual double support_upper() const = 0;
  virtual std::vector<double> breakpoints() const = 0;
  virtual double singularity_order() const = 0;
  virtual std::string description() const = 0;
};

namespace {

using Impl = RadialDensity::Impl;

double numeric_tail(const Impl& f, double s, int k) {
  const double top = f.support_upper();
  if (s >= top) {
    return 0.0;
  }
  const auto bp = f.breakpoints();
  return integrate([&](double r) { return std::pow(r, k) * f.eval(r); }, s, top, bp, 20);
}

// int_a^b r^k dr
double power_integral(double a, double b, int k) {
  if (k == -1) {
    return std::log(b / a);
  }
  return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
}

struct PiecewiseLinear final : Impl {
  std::vector<double> knots;
  std::vector<double> values;

  double eval(double r) const override {
    if (r <= knots.front()) {
      return values.front();
    }
    if (r >= knots.back()) {
      return 0.0;
    }
    const auto it = std::upper_bound(knots.begin(), knots.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin());
    const double a = knots[i - 1];
    const double b = knots[i];
    const double w = (r - a) / (b - a);
    return (1.0 - w) * values[i - 1] + w * values[i];
  }

  double tail(double s, int k) const override {
    if (s >= knots.back()) {
      return 0.0;
    }
    double sum = 0.0;
    if (s < knots.front()) {
      sum += values.front() * power_integral(s, knots.front(), k);
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
      double a = knots[i - 1];
      const double b = knots[i];
      if (b <= s) {
        continue;
      }
      const double slope = (values[i] - values[i - 1]) / (b - a);
      const double intercept = values[i - 1] - slope * a;
      a = std::max(a, s);
      sum += intercept * power_integral(a, b, k) + slope * power_integral(a, b, k + 1);
    }
    return sum;
  }

  double support_upper() const override { return knots.back(); }
  std::vector<double> breakpoints() const override {
    std::vector<double> bp;
    for (double k : knots) {
      if (k > 0.0) {
        bp.push_back(k);
      }
    }
    return bp;
  }
  double singularity_order() const override { return 0.0; }
  std::string description() const override {
    std::ostringstream os;
    os << "piecewise_linear(";
    for (std::size_t i = 0; i < knots.size(); ++i) {
      os << (i ? "; " : "") << knots[i] << ":" << values[i];
    }
    os << ")";
    return os.str();
  }
};

struct NegLog final : Impl {
  double a = 1.0;

  double eval(double r) const override { return r < a ? -std::log(r / a) : 0.0; }

  // int_s^a r^k (-ln(r/a)) dr; substitute r = a u.
  double tail(double s, int k) const override {
    if (s >= a) {
      return 0.0;
    }
    const double u = s / a;
    const double scale = std::pow(a, k + 1);
    if (k == -1) {
      const double l = std::log(u);
      return 0.5 * l * l;
    }
    const double p = k + 1;
    const double up = std::pow(u, p);
    return scale * (1.0 / (p * p) + up * std::log(u) / p - up / (p * p));
  }

  double support_upper() const override { return a; }
  std::vector<double> breakpoints() const override { return {a}; }
  double singularity_order() const override { return 0.0; }
  std::string description() const override {
    std::ostringstream os;
    os << "neg_log(" << a << ")";
    return os.str();
  }
};

struct Analytic final : Impl {
  std::string name;
  std::function<double(double)> f;
  double top = 1.0;
  std::vector<double> bp;
  double order = 0.0;

  double eval(double r) const override { return r < top ? f(r) : 0.0; }
  double tail(double s, int k) const override { return numeric_tail(*this, s, k); }
  double support_upper() const override { return top; }
  std::vector<double> breakpoints() const override { return bp; }
  double singularity_order() const override { return order; }
  std::string description() const override { return name; }
};

struct Scaled final : Impl {
  std::shared_ptr<const Impl> base;
  double c = 1.0;

  double eval(double r) const override { return c * base->eval(r); }
  double tail(double s, int k) const override { return c * base->tail(s, k); }
  double support_upper() const override { return base->support_upper(); }
  std::vector<double> breakpoints() const override { return base->breakpoints(); }
  double singularity_order() const override { return base->singularity_order(); }
  std::string description() const override {
    std::ostringstream os;
    os << c << "*" << base->description();
    return os.str();
  }
};

// R^m applied to base.
struct Transformed final : Impl {
  std::shared_ptr<const Impl> base;
  int m = 1;

  double eval(double r) const override {
    if (r >= base->support_upper()) {
      return 0.0;
    }
    return std::pow(r, m) * base->eval(r) + m * base->tail(r, m - 1);
  }

  // int_s^inf r^k R^m eta(r) dr, by parts on the inner tail integral.
  double tail(double s, int k) const override {
    if (s >= base->support_upper()) {
      return 0.0;
    }
    if (k == -1) {
      return numeric_tail(*this, s, k);
    }
    const double direct = base->tail(s, k + m);
    const double by_parts = (direct - std::pow(s, k + 1) * base->tail(s, m - 1)) / (k + 1);
    return direct + m * by_parts;
  }

  double support_upper() const override { return base->support_upper(); }
  std::vector<double> breakpoints() const override { return base->breakpoints(); }
  double singularity_order() const override { return std::max(0.0, base->singularity_order() - m); }
  std::string description() const override {
    std::ostringstream os;
    os << "R^" << m << "[" << base->description() << "]";
    return os.str();
  }
};

}  // namespace

RadialDensity RadialDensity::piecewise_linear(std::vector<double> knots, std::vector<double> values) {
  if (knots.size() != values.size() || knots.empty()) {
    throw ConfigError("density: knots and values must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i]) || !std::isfinite(values[i])) {
      throw ConfigError("density: knots and values must be finite");
    }
    if (knots[i] < 0.0 || (i > 0 && knots[i] <= knots[i - 1])) {
      throw ConfigError("density: knots must be nonnegative and strictly increasing");
    }
  }
  if (values.back() != 0.0) {
    throw ConfigError("density: bounded support violated, the last value must be 0");
  }
  if (knots.back() <= 0.0) {
    throw ConfigError("density: bounded support violated, support must be a positive interval");
  }
  auto impl = std::make_shared<PiecewiseLinear>();
  impl->knots = std::move(knots);
  impl->values = std::move(values);
  RadialDensity d(impl);
  d.tags_.push_back({ClassTag::Kind::Cb, 0, 0});
  return d;
}

RadialDensity RadialDensity::tent(double c) {
  if (!(c > 0.0)) {
    throw DomainError("tent: support must be positive");
  }
  return piecewise_linear({0.0, c}, {c, 0.0});
}

RadialDensity RadialDensity::neg_log(double a) {
  if (!(a > 0.0)) {
    throw DomainError("neg_log: support must be positive");
  }
  auto impl = std::make_shared<NegLog>();
  impl->a = a;
  return RadialDensity(impl);
}

RadialDensity RadialDensity::analytic(std::string name, std::function<double(double)> f, double support_upper,
                                      std::vector<double> breakpoints, double singularity_order) {
  if (!(support_upper > 0.0) || !std::isfinite(support_upper)) {
    throw ConfigError("density: bounded support violated, support_upper must be finite and positive");
  }
  auto impl = std::make_shared<Analytic>();
  impl->name = std::move(name);
  impl->f = std::move(f);
  impl->top = support_upper;
  std::sort(breakpoints.begin(), breakpoints.end());
  impl->bp = std::move(breakpoints);
  impl->order = singularity_order;
  return RadialDensity(impl);
}

double RadialDensity::operator()(double r) const {
  if (!(r > 0.0)) {
    throw DomainError("density: evaluation requires r > 0");
  }
  return impl_->eval(r);
}

double RadialDensity::tail_moment(double s, int k) const {
  if (!(s > 0.0)) {
    throw DomainError("density: tail moment requires s > 0");
  }
  return impl_->tail(s, k);
}

double RadialDensity::support_upper() const { return impl_->support_upper(); }
std::vector<double> RadialDensity::breakpoints() const { return impl_->breakpoints(); }
double RadialDensity::singularity_order() const { return impl_->singularity_order(); }
std::string RadialDensity::description() const { return impl_->description(); }

double RadialDensity::limit_at_zero() const {
  if (auto pl = piecewise()) {
    return pl->second.front();
  }
  double prev = impl_->eval(0x1p-20);
  double diff_prev = std::abs(impl_->eval(0x1p-19) - prev);
  for (int k = 21; k <= 44; ++k) {
    const double v = impl_->eval(std::ldexp(1.0, -k));
    const double diff = std::abs(v - prev);
    if (!std::isfinite(v) || (diff > 1e-9 * (1.0 + std::abs(v)) && diff >= 0.9 * diff_prev)) {
      if (k == 44 || !std::isfinite(v)) {
        throw DomainError("density: no finite limit at 0 for " + description());
      }
    }
    diff_prev = diff;
    prev = v;
  }
  if (diff_prev > 1e-8 * (1.0 + std::abs(prev))) {
    throw DomainError("density: no finite limit at 0 for " + description());
  }
  return prev;
}

std::optional<std::pair<std::vector<double>, std::vector<double>>> RadialDensity::piecewise() const {
  if (auto* pl = dynamic_cast<const PiecewiseLinear*>(impl_.get())) {
    return std::make_pair(pl->knots, pl->values);
  }
  return std::nullopt;
}

bool RadialDensity::has_tag(const ClassTag& tag) const {
  return std::find(tags_.begin(), tags_.end(), tag) != tags_.end();
}

RadialDensity RadialDensity::with_tag(const ClassTag& tag) const {
  const Certification c = certify(*this, tag);
  if (!c.ok) {
    throw ClassViolation(tag.str() + " violated for " + description() + ": " + c.message);
  }
  RadialDensity out = *this;
  if (!out.has_tag(tag)) {
    out.tags_.push_back(tag);
  }
  return out;
}

RadialDensity RadialDensity::scaled(double c) const {
  auto impl = std::make_shared<Scaled>();
  impl->base = impl_;
  impl->c = c;
  RadialDensity out(impl);
  out.tags_ = tags_;
  return out;
}

namespace {

// Checks q(2^-k) -> 0 (limit_zero) or converges (otherwise).
Certification check_sequence(const std::function<double(double)>& q, bool limit_zero) {
  Certification cert;
  std::vector<double> seq;
  for (int k = 2; k <= 48; ++k) {
    seq.push_back(q(std::ldexp(1.0, -k)));
  }
  int growth = 0;
  double peak = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!std::isfinite(seq[i])) {
      cert.ok = false;
      cert.message = "non-finite value near 0";
      return cert;
    }
    peak = std::max(peak, std::abs(seq[i]));
    if (i > 0 && std::abs(seq[i]) >= 2.0 * std::abs(seq[i - 1]) && std::abs(seq[i]) > 1e-300) {
      if (++growth >= 3) {
        cert.ok = false;
        cert.message = "diverges toward 0 (three consecutive doublings)";
        return cert;
      }
    } else {
      growth = 0;
    }
  }
  const double last = std::abs(seq.back());
  if (limit_zero) {
    if (last > 1e-6 * std::max(1.0, peak)) {
      const double step = std::abs(seq.back() - seq[seq.size() - 2]);
      if (step <= 1e-9 * last) {
        cert.ok = false;
        cert.message = "settles at a nonzero limit toward 0";
        return cert;
      }
      cert.warning = true;
      cert.message = "limit at 0 not clearly zero";
    }
  } else {
    const double step = std::abs(seq.back() - seq[seq.size() - 2]);
    if (step > 1e-6 * std::max(1.0, last)) {
      cert.warning = true;
      cert.message = "limit at 0 not clearly settled";
    }
  }
  return cert;
}

}  // namespace

Certification certify(const RadialDensity& xi, const ClassTag& tag) {
  switch (tag.kind) {
    case ClassTag::Kind::Cb: {
      Certification cert;
      try {
        (void)xi.limit_at_zero();
      } catch (const DomainError& e) {
        cert.ok = false;
        cert.message = e.what();
      }
      return cert;
    }
    case ClassTag::Kind::D: {
      if (tag.j >= tag.n) {
        return check_sequence([&](double r) { return xi(r); }, false);
      }
      const int p = tag.n - tag.j;
      Certification a = check_sequence([&](double r) { return std::pow(r, p) * xi(r); }, true);
      if (!a.ok) {
        return a;
      }
      Certification b = check_sequence([&](double r) { return xi.tail_moment(r, p - 1); }, false);
      if (!b.ok) {
        return b;
      }
      a.warning = a.warning || b.warning;
      if (b.warning) {
        a.message += a.message.empty() ? b.message : "; " + b.message;
      }
      return a;
    }
    case ClassTag::Kind::T: {
      const int p = tag.n - tag.j + 1;
      return check_sequence([&](double r) { return std::pow(r, p) * xi(r); }, true);
    }
  }
  return {};
}

RadialDensity R_power(const RadialDensity& xi, int m) {
  if (m == 0) {
    return xi;
  }
  auto impl = std::make_shared<Transformed>();
  impl->base = xi.impl_;
  impl->m = m;
  RadialDensity out(impl);
  for (const ClassTag& tag : xi.tags_) {
    if (tag.kind == ClassTag::Kind::T) {
      out = out.with_tag({ClassTag::Kind::T, tag.n - m, tag.j});
    } else if (tag.kind == ClassTag::Kind::Cb && m > 0) {
      out.tags_.push_back(tag);
    }
  }
  return out;
}

RadialDensity R_apply(const RadialDensity& xi) { return R_power(xi, 1); }

namespace {

std::vector<double> kinks_above(std::vector<double> bp, double lo, double hi) {
  std::vector<double> out;
  for (double b : bp) {
    if (b > lo && b < hi) {
      out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

BivariateDensity R_partial(const BivariateDensity& gamma, int axis, int m) {
  if (axis != 1 && axis != 2) {
    throw DomainError("R_partial: axis must be 1 or 2");
  }
  if (m == 0) {
    return gamma;
  }
  BivariateDensity out;
  out.support_upper = gamma.support_upper;
  out.breakpoints = gamma.breakpoints;
  out.eval = [gamma, axis, m](double s, double t) {
    const double x = axis == 1 ? s : t;
    const double other = axis == 1 ? t : s;
    auto at = [&](double r) { return axis == 1 ? gamma.eval(r, other) : gamma.eval(other, r); };
    const double top = gamma.support_upper;
    if (x >= top) {
      return 0.0;
    }
    if (x <= 0.0 && m < 0) {
      throw DomainError("R_partial: negative powers need a positive coordinate");
    }
    const double head = x > 0.0 ? std::pow(x, m) * at(x) : 0.0;
    const auto bp = kinks_above(gamma.breakpoints ? gamma.breakpoints(axis, other) : std::vector<double>{}, x, top);
    const double tail = integrate([&](double r) { return std::pow(r, m - 1) * at(r); }, x, top, bp, 20);
    return head + m * tail;
  };
  return out;
}

KinematicKernel::KinematicKernel(const RadialDensity& alpha, int n, int k)
    : alpha_(alpha), inner_(R_power(alpha, -(n - k))), n_(n), k_(k) {
  if (n < 1 || n > kMaxDim || k < 0 || k > n) {
    throw DomainError("kernel: need 1 <= n <= 4 and 0 <= k <= n");
  }
  const RadialDensity inner = inner_;
  BivariateDensity gmax;
  gmax.support_upper = inner.support_upper();
  gmax.eval = [inner](double s, double t) {
    const double r = std::max(s, t);
    if (!(r > 0.0)) {
      throw DomainError("kernel: max(s, t) must be positive");
    }
    return r >= inner.support_upper() ? 0.0 : inner(r);
  };
  gmax.breakpoints = [inner](int, double other) {
    std::vector<double> bp = inner.breakpoints();
    bp.push_back(other);
    return bp;
  };
  composite_ = R_partial(gmax, 1, n - k);
}

double KinematicKernel::operator()(double s, double t) const {
  if (s < 0.0 || t < 0.0 || !(std::max(s, t) > 0.0)) {
    throw DomainError("kernel: arguments must be nonnegative and not both zero");
  }
  return composite_.eval(s, t);
}

double KinematicKernel::collapsed(double s, double t) const {
  const double r = std::max(s, t);
  if (!(r > 0.0) || s < 0.0 || t < 0.0) {
    throw DomainError("kernel: arguments must be nonnegative and not both zero");
  }
  return r >= alpha_.support_upper() ? 0.0 : alpha_(r);
}

KinematicKernel kernel_make(const RadialDensity& alpha, int n, int k) { return KinematicKernel(alpha, n, k); }

}  // namespace kin
