#include "kin/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace kin {

namespace {

constexpr std::uint64_t kRotationStream = 0x726f74;

std::vector<double> merged(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Quadrature grids revisit each radius once per direction.
std::function<double(double)> memoized(std::function<double(double)> fn) {
  struct Cache {
    std::mutex lock;
    std::unordered_map<double, double> values;
  };
  auto cache = std::make_shared<Cache>();
  return [fn = std::move(fn), cache](double r) {
    {
      std::lock_guard<std::mutex> guard(cache->lock);
      if (const auto it = cache->values.find(r); it != cache->values.end()) {
        return it->second;
      }
    }
    const double v = fn(r);
    std::lock_guard<std::mutex> guard(cache->lock);
    cache->values.emplace(r, v);
    return v;
  };
}

// Best available MA_j route for one function.
WeightedIntegral ma_any(const MeasureQuery& q, const OracleSettings& oracle) {
  if (q.j == 0) {
    return ma0_integral(q.function.dim(), q.density, q.weight, q.region_radius);
  }
  if (radially_reducible(q.function) || (q.weight == WeightKind::Vector && axially_reducible(q.function))) {
    return ma_j_closed(q);
  }
  if (smooth_off_origin(q.function)) {
    return ma_j_smooth(q);
  }
  return ma_j_transform(q, Route::Oracle, oracle);
}

// sum over atoms of mass * fn(r) plus int fn(r) density(r) dr on (0, outer).
double pair_with(const RadialMarginal& m, const std::function<double(double)>& fn, std::vector<double> breakpoints) {
  double total = 0.0;
  for (const auto& [r, mass] : m.atoms) {
    if (mass != 0.0 && r < m.outer) {
      total += mass * fn(r);
    }
  }
  if (m.has_density && m.outer > 0.0) {
    const auto bp = merged(std::move(breakpoints), m.kinks);
    total += integrate([&](double r) { return fn(r) * m.density(r); }, 0.0, m.outer, bp, 20);
  }
  return total;
}

SideResult rotation_average(const KinematicExperiment& exp, WeightKind kind) {
  validate(exp);
  const int n = exp.n;
  const bool invariant = is_rotation_invariant(exp.v);
  const int count = invariant ? 1 : exp.rotations;
  const CounterRng master(exp.seed, kRotationStream);
  Vector sum = Vector::Zero(kind == WeightKind::Scalar ? 1 : n);
  Vector sum_sq = sum;
  double quad = 0.0;
  Method method = Method::ClosedForm;
  for (int i = 0; i < count; ++i) {
    Rotation rot = Rotation::identity(n);
    if (!invariant) {
      CounterRng rng = master.split(static_cast<std::uint64_t>(i));
      rot = haar_rotation(n, rng);
    }
    const ConvexFunction f = exp.u + exp.v.rotated(rot);
    MeasureQuery q{f, exp.j, exp.alpha, kind, std::nullopt, exp.quadrature};
    const WeightedIntegral w = ma_any(q, exp.oracle);
    sum += w.value;
    sum_sq += w.value.cwiseProduct(w.value);
    quad = std::max(quad, w.error_estimate);
    method = w.method;
  }
  const Vector mean = sum / count;
  double mc = 0.0;
  if (count > 1) {
    const Vector var = (sum_sq / count - mean.cwiseProduct(mean)) * (static_cast<double>(count) / (count - 1));
    mc = std::sqrt(var.cwiseMax(0.0).sum() / count);
  }
  const double kn = kappa(n);
  SideResult out;
  out.value = kind == WeightKind::Scalar ? WeightedIntegral::scalar_result(kn * mean(0), method)
                                         : WeightedIntegral::vector_result(kn * mean, method);
  out.monte_carlo_stderr = kn * mc;
  out.quadrature_error = kn * quad;
  out.value.error_estimate = out.combined_error();
  out.samples = count;
  out.notes = std::string("lhs route ") + to_string(method);
  if (invariant) {
    out.notes += "; v is rotation invariant, rotation average evaluated exactly";
  } else {
    out.notes += "; " + std::to_string(count) + " Haar rotations";
  }
  return out;
}

}  // namespace

double SideResult::combined_error() const { return std::hypot(monte_carlo_stderr, quadrature_error); }

void validate(const KinematicExperiment& exp) {
  if (exp.n < 2 || exp.n > kMaxDim) {
    throw DomainError("kinematic experiment: n must be in 2..4");
  }
  if (exp.j < 1 || exp.j > exp.n) {
    throw DomainError("kinematic experiment: j must be in 1..n");
  }
  if (exp.u.dim() != exp.n || exp.v.dim() != exp.n) {
    throw DomainError("kinematic experiment: function dimension mismatch");
  }
  if (exp.rotations < 1) {
    throw DomainError("kinematic experiment: need at least one rotation");
  }
  const Certification c = certify(exp.alpha, {ClassTag::Kind::T, exp.n, exp.n});
  if (!c.ok) {
    throw ClassViolation("kinematic experiment: alpha(s) s does not vanish at 0: " + c.message);
  }
}

SideResult lhs_vector(const KinematicExperiment& exp) { return rotation_average(exp, WeightKind::Vector); }
SideResult lhs_scalar(const KinematicExperiment& exp) { return rotation_average(exp, WeightKind::Scalar); }

SideResult rhs_vector(const KinematicExperiment& exp) {
  validate(exp);
  const int n = exp.n;
  const int j = exp.j;
  const double top = exp.alpha.support_upper();
  WeightedIntegral total = WeightedIntegral::vector_result(Vector::Zero(n), Method::ClosedForm);
  std::ostringstream notes;
  notes << "rhs routes";
  for (int k = 1; k <= j; ++k) {
    const auto kernel = std::make_shared<KinematicKernel>(exp.alpha, n, k);
    std::function<double(double)> beta;
    std::vector<double> bp = exp.alpha.breakpoints();
    if (k == j) {
      const double kn = kappa(n);
      beta = [kernel, kn, top](double p) { return p >= top ? 0.0 : kn * (*kernel)(p, 0.0); };
    } else {
      auto m = std::make_shared<RadialMarginal>(ma_radial_marginal(exp.v, j - k, top, exp.quadrature));
      bp = merged(bp, m->kinks);
      beta = [kernel, m, top](double p) {
        if (p >= top) {
          return 0.0;
        }
        return pair_with(*m, [&](double r) { return (*kernel)(p, r); }, {p});
      };
    }
    const RadialDensity weight = RadialDensity::analytic("beta_" + std::to_string(k), memoized(std::move(beta)), top, bp);
    MeasureQuery q{exp.u, k, weight, WeightKind::Vector, std::nullopt, exp.quadrature};
    const WeightedIntegral w = ma_any(q, exp.oracle);
    notes << " k=" << k << ":" << to_string(w.method);
    total = total + binom(j, k) * w;
  }
  SideResult out;
  out.value = total;
  out.quadrature_error = total.error_estimate;
  out.samples = 1;
  out.notes = notes.str();
  return out;
}

SideResult rhs_scalar(const KinematicExperiment& exp) {
  validate(exp);
  const int j = exp.j;
  const double top = exp.alpha.support_upper();
  const RadialDensity alpha = exp.alpha;
  const double at_zero = alpha.limit_at_zero();
  auto amax = [&](double p, double r) {
    const double m = std::max(p, r);
    if (m >= top) {
      return 0.0;
    }
    return m == 0.0 ? at_zero : alpha(m);
  };
  double total = 0.0;
  for (int i = 0; i <= j; ++i) {
    const RadialMarginal mu = ma_radial_marginal(exp.u, i, top, exp.quadrature);
    const RadialMarginal mv = ma_radial_marginal(exp.v, j - i, top, exp.quadrature);
    const double term = pair_with(
        mu,
        [&](double p) { return pair_with(mv, [&](double r) { return amax(p, r); }, merged({p}, alpha.breakpoints())); },
        alpha.breakpoints());
    total += binom(j, i) * term;
  }
  SideResult out;
  out.value = WeightedIntegral::scalar_result(total, Method::ClosedForm);
  out.samples = 1;
  out.notes = "rhs from radial marginals, origin atoms analytic";
  return out;
}

Vector z_closed_form(int n, int j, const RadialDensity& xi, double mu, double s, double lambda, double t) {
  if (n < 2 || n > kMaxDim || j < 1 || j > n) {
    throw DomainError("z_closed_form: needs 1 <= j <= n");
  }
  if (!(s > 0.0) || !(t > 0.0) || mu < 0.0 || lambda < 0.0) {
    throw DomainError("z_closed_form: needs s, t > 0 and mu, lambda >= 0");
  }
  const RadialDensity alpha = R_power(xi, n - j).scaled(binom(n, j));
  auto value = [](const RadialDensity& d, double r) { return r >= d.support_upper() ? 0.0 : d(r); };
  double sum = std::pow(mu, j) * std::pow(s, n - j + 1) * value(R_power(alpha, -(n - j)), s);
  for (int k = 1; k <= j - 1; ++k) {
    sum += binom(j, k) * std::pow(lambda, j - k) * std::pow(mu, k) * std::pow(s, n - k + 1) *
           value(R_power(alpha, -(n - k)), std::max(s, t));
  }
  return kappa(n - 1) * sum / n * unit_vector(n, n - 1);
}

WeightedIntegral corollary_rhs(int n, int j, const RadialDensity& alpha, const ConvexFunction& u, const Body& body,
                               const QuadratureSettings& settings) {
  if (n < 2 || n > kMaxDim || j < 1 || j > n || u.dim() != n) {
    throw DomainError("corollary_rhs: index or dimension out of range");
  }
  WeightedIntegral total = WeightedIntegral::vector_result(Vector::Zero(n), Method::ClosedForm);
  for (int k = 1; k <= j; ++k) {
    const double c = binom(j, k) / binom(n, j - k) * kappa(n - j + k) * intrinsic_volume(body, n, j - k);
    if (c == 0.0) {
      continue;
    }
    MeasureQuery q{u, k, alpha, WeightKind::Vector, std::nullopt, settings};
    total = total + c * ma_any(q, {});
  }
  return total;
}

double classical_coefficient(int n, int j, int k) {
  return binom(2 * n - j, n - j) * kappa(n - k) * kappa(n + k - j) /
         (binom(2 * n - j, n - k) * kappa(n) * kappa(n - j));
}

VerificationReport classical_balls(int n, int j, double r1, double r2) {
  if (n < 1 || n > kMaxDim || j < 0 || j > n) {
    throw DomainError("classical_balls: index out of range");
  }
  const double lhs = intrinsic_volume(BallBody{r1 + r2}, n, j);
  double rhs = 0.0;
  for (int k = 0; k <= j; ++k) {
    rhs += classical_coefficient(n, j, k) * intrinsic_volume(BallBody{r1}, n, k) *
           intrinsic_volume(BallBody{r2}, n, j - k);
  }
  VerificationReport r;
  r.identity = "classical_kinematic_balls";
  r.n = n;
  r.j = j;
  r.lhs = Vector::Constant(1, lhs);
  r.rhs = Vector::Constant(1, rhs);
  r.lhs_method = "closed_form";
  r.rhs_method = "closed_form";
  r.tolerance = 0.0;
  r.abs_floor = 1e-12;
  r.evaluate();
  add_note(r, "coefficient sum taken over k = 0..j");
  return r;
}

VerificationReport scalar_kinematic(const KinematicExperiment& exp, double tolerance) {
  const SideResult lhs = lhs_scalar(exp);
  const SideResult rhs = rhs_scalar(exp);
  VerificationReport r;
  r.identity = "kinematic_scalar";
  r.n = exp.n;
  r.j = exp.j;
  r.lhs = lhs.value.value;
  r.rhs = rhs.value.value;
  r.lhs_method = to_string(lhs.value.method);
  r.rhs_method = to_string(rhs.value.method);
  r.stderr_estimate = std::hypot(lhs.combined_error(), rhs.combined_error());
  r.samples = lhs.samples;
  r.seed = exp.seed;
  r.tolerance = tolerance;
  r.evaluate();
  add_note(r, lhs.notes);
  add_note(r, rhs.notes);
  return r;
}

VerificationReport main_theorem_report(const KinematicExperiment& exp, double tolerance, double abs_floor) {
  const SideResult lhs = lhs_vector(exp);
  const SideResult rhs = rhs_vector(exp);
  VerificationReport r;
  r.identity = "kinematic_vector";
  r.n = exp.n;
  r.j = exp.j;
  r.lhs = lhs.value.value;
  r.rhs = rhs.value.value;
  r.lhs_method = to_string(lhs.value.method);
  r.rhs_method = to_string(rhs.value.method);
  r.stderr_estimate = std::hypot(lhs.combined_error(), rhs.combined_error());
  r.samples = lhs.samples;
  r.seed = exp.seed;
  r.tolerance = tolerance;
  r.abs_floor = abs_floor;
  r.evaluate();
  add_note(r, lhs.notes);
  add_note(r, rhs.notes);
  return r;
}

}  // namespace kin
