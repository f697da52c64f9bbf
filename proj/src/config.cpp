#include "kin/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "kin/oracle.hpp"
#include "kin/valuations.hpp"

namespace kin {

using nlohmann::json;

namespace {

const std::vector<double> kDefaultTents{0.5, 1.0, 1.5, 2.0, 3.0};

Vector to_vector(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError("expected a vector of 1.." + std::to_string(kMaxDim) + " numbers");
  }
  Vector v(static_cast<long>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<long>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError("expected a square matrix");
  }
  const long n = static_cast<long>(j.size());
  Matrix m(n, n);
  for (long r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<long>(j[r].size()) != n) {
      throw ConfigError("expected a square matrix");
    }
    for (long c = 0; c < n; ++c) {
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

json from_vector(const Vector& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

json from_matrix(const Matrix& m) {
  json a = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    a.push_back(row);
  }
  return a;
}

int dimension(const json& j, const char* key = "n") {
  if (!j.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  return j.at(key).get<int>();
}

ConvexFunction function_from(const json& j) {
  if (!j.is_object() || !j.contains("variant")) {
    throw ConfigError("function: expected an object with a 'variant' field");
  }
  const auto variant = j.at("variant").get<std::string>();
  try {
    if (variant == "quadratic") {
      return ConvexFunction::quadratic(to_vector(j.at("center")), j.value("scale", 0.5));
    }
    if (variant == "quartic_norm") {
      return ConvexFunction::quartic_norm(to_vector(j.at("center")));
    }
    if (variant == "cone") {
      return ConvexFunction::cone(dimension(j), j.at("t").get<double>());
    }
    if (variant == "half_cone") {
      return ConvexFunction::half_cone(dimension(j), j.at("s").get<double>());
    }
    if (variant == "support_ball") {
      const Vector center = j.contains("center") ? to_vector(j.at("center")) : Vector::Zero(dimension(j));
      return ConvexFunction::support_ball(j.value("radius", 1.0), center);
    }
    if (variant == "support_ellipse") {
      return ConvexFunction::support_ellipse(SymMatrix(to_matrix(j.at("shape"))));
    }
    if (variant == "support_segment") {
      const Vector dir = to_vector(j.at("direction"));
      const Vector center = j.contains("center") ? to_vector(j.at("center")) : Vector::Zero(dir.size());
      return ConvexFunction::support_segment(j.value("half_length", 1.0), dir, center);
    }
    if (variant == "norm") {
      return ConvexFunction::norm(dimension(j));
    }
    if (variant == "affine") {
      return ConvexFunction::affine(to_vector(j.at("slope")), j.value("offset", 0.0));
    }
    if (variant == "zero") {
      return ConvexFunction::zero(dimension(j));
    }
    if (variant == "combination") {
      std::vector<std::pair<double, ConvexFunction>> terms;
      for (const auto& t : j.at("terms")) {
        terms.emplace_back(t.at("coefficient").get<double>(), function_from(t.at("function")));
      }
      return ConvexFunction::combination(std::move(terms));
    }
    if (variant == "rotated") {
      return function_from(j.at("function")).rotated(Rotation(to_matrix(j.at("rotation"))));
    }
  } catch (const DomainError& e) {
    throw ConfigError("function '" + variant + "': " + e.what());
  }
  throw ConfigError("function: unknown variant '" + variant + "'");
}

json function_json(const ConvexFunction& f) {
  const int n = f.dim();
  return std::visit(
      [n](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return {{"variant", "quadratic"}, {"center", from_vector(v.center)}, {"scale", v.scale}};
        } else if constexpr (std::is_same_v<T, QuarticNorm>) {
          return {{"variant", "quartic_norm"}, {"center", from_vector(v.center)}};
        } else if constexpr (std::is_same_v<T, Cone>) {
          return {{"variant", "cone"}, {"n", n}, {"t", v.t}};
        } else if constexpr (std::is_same_v<T, HalfCone>) {
          return {{"variant", "half_cone"}, {"n", n}, {"s", v.s}};
        } else if constexpr (std::is_same_v<T, SupportBall>) {
          return {{"variant", "support_ball"}, {"radius", v.radius}, {"center", from_vector(v.center)}};
        } else if constexpr (std::is_same_v<T, SupportEllipse>) {
          return {{"variant", "support_ellipse"}, {"shape", from_matrix(v.shape.matrix())}};
        } else if constexpr (std::is_same_v<T, Norm>) {
          return {{"variant", "norm"}, {"n", n}};
        } else if constexpr (std::is_same_v<T, Affine>) {
          return {{"variant", "affine"}, {"slope", from_vector(v.slope)}, {"offset", v.offset}};
        } else if constexpr (std::is_same_v<T, SupportSegment>) {
          return {{"variant", "support_segment"},
                  {"half_length", v.half_length},
                  {"direction", from_vector(v.direction)},
                  {"center", from_vector(v.center)}};
        } else if constexpr (std::is_same_v<T, NonnegCombination>) {
          json terms = json::array();
          for (const auto& t : v.terms) {
            terms.push_back({{"coefficient", t.coefficient}, {"function", function_json(t.function)}});
          }
          return {{"variant", "combination"}, {"terms", terms}};
        } else {
          return {{"variant", "rotated"},
                  {"rotation", from_matrix(v.rotation.matrix())},
                  {"function", function_json(v.function)}};
        }
      },
      f.variant());
}

RadialDensity density_from(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("density: expected an object");
  }
  try {
    if (j.contains("tent")) {
      return RadialDensity::tent(j.at("tent").get<double>());
    }
    if (j.contains("neg_log")) {
      return RadialDensity::neg_log(j.at("neg_log").get<double>());
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!j.contains("knots") || !j.contains("values")) {
    throw ConfigError("density: expected 'knots' and 'values'");
  }
  return RadialDensity::piecewise_linear(j.at("knots").get<std::vector<double>>(),
                                         j.at("values").get<std::vector<double>>());
}

WeightKind weight_from(const std::string& s) {
  if (s == "scalar") {
    return WeightKind::Scalar;
  }
  if (s == "vector") {
    return WeightKind::Vector;
  }
  throw ConfigError("weight must be 'scalar' or 'vector', got '" + s + "'");
}

// Inline objects are registered under a generated name.
class Resolver {
 public:
  explicit Resolver(RunConfig& c) : c_(c) {}

  std::string function(const json& j) {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      c_.function(name);
      return name;
    }
    const auto name = "inline-function-" + std::to_string(count_++);
    c_.functions.emplace(name, function_from(j));
    return name;
  }

  std::string density(const json& j) {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      c_.density(name);
      return name;
    }
    const auto name = "inline-density-" + std::to_string(count_++);
    c_.densities.emplace(name, density_from(j));
    return name;
  }

 private:
  RunConfig& c_;
  int count_ = 0;
};

Body body_from(const json& j) {
  if (j.contains("ball")) {
    return BallBody{j.at("ball").get<double>()};
  }
  if (j.contains("ellipse")) {
    return EllipseBody{SymMatrix(to_matrix(j.at("ellipse")))};
  }
  if (j.contains("segment")) {
    return SegmentBody{j.at("segment").get<double>()};
  }
  throw ConfigError("body: expected 'ball', 'ellipse' or 'segment'");
}

ConvexFunction support_of(const Body& body, int n) {
  return std::visit(
      [n](const auto& b) -> ConvexFunction {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, BallBody>) {
          return ConvexFunction::support_ball(b.radius, Vector::Zero(n));
        } else if constexpr (std::is_same_v<T, EllipseBody>) {
          return ConvexFunction::support_ellipse(b.shape);
        } else {
          return ConvexFunction::support_segment(0.5 * b.length, unit_vector(n, 0), Vector::Zero(n));
        }
      },
      body);
}

std::vector<int> js_or_default(const std::vector<int>& js, int n) {
  if (!js.empty()) {
    return js;
  }
  std::vector<int> all;
  for (int j = 1; j <= n; ++j) {
    all.push_back(j);
  }
  return all;
}

std::vector<int> appendix_js(const RunConfig& c) {
  return js_or_default(c.appendix.js.empty() ? c.js : c.appendix.js, c.n);
}

KinematicExperiment experiment(const RunConfig& c, const std::string& u, const std::string& v,
                               const std::string& alpha, int j) {
  return KinematicExperiment{.n = c.n,
                             .j = j,
                             .alpha = c.density(alpha),
                             .u = c.function(u),
                             .v = c.function(v),
                             .rotations = c.rotations,
                             .quadrature = c.quadrature,
                             .oracle = c.oracle,
                             .seed = c.seed};
}

void validate_config(const RunConfig& c) {
  if (c.n < 2 || c.n > 3) {
    throw ConfigError("n must be 2 or 3");
  }
  for (int j : c.js) {
    if (j < 0 || j > c.n) {
      throw ConfigError("j out of range 0..n");
    }
  }
  if (c.rotations < 1) {
    throw ConfigError("rotations must be positive");
  }
  for (const auto& [name, f] : c.functions) {
    if (f.dim() != c.n) {
      throw ConfigError("function '" + name + "' has dimension " + std::to_string(f.dim()) + ", config n is " +
                        std::to_string(c.n));
    }
  }
  try {
    for (const auto& m : c.measures) {
      if (m.j < 0 || m.j > c.n) {
        throw ConfigError("measures: j out of range");
      }
      if (m.expected && m.expected->size() != (m.weight == WeightKind::Scalar ? 1 : c.n)) {
        throw ConfigError("measures: expected value has the wrong length");
      }
    }
    for (const auto& v : c.valuations) {
      const auto& var = c.function(v.function).variant();
      if (std::holds_alternative<Cone>(var)) {
        if (v.j < 1 || v.j > c.n - 1) {
          throw ConfigError("valuations: cone cases need 1 <= j <= n-1");
        }
        ValuationSpec::scalar(c.n, v.j, c.density(v.density));
      } else if (std::holds_alternative<HalfCone>(var)) {
        if (v.j < 1 || v.j > c.n) {
          throw ConfigError("valuations: half_cone cases need 1 <= j <= n");
        }
        ValuationSpec::vector(c.n, v.j, c.density(v.density));
      } else if (!std::holds_alternative<SupportBall>(var) && !std::holds_alternative<SupportEllipse>(var) &&
                 !std::holds_alternative<SupportSegment>(var) && !std::holds_alternative<Norm>(var)) {
        throw ConfigError("valuations: function '" + v.function +
                          "' must be a cone, a half cone or a support function");
      }
    }
    if (!c.appendix.cases.empty()) {
      for (int j : appendix_js(c)) {
        if (j < 1) {
          throw ConfigError("appendix: j must be in 1..n (set a j-list in the appendix section)");
        }
        ValuationSpec::vector(c.n, j, c.density(c.appendix.density));
      }
    }
    for (const auto& k : c.kinematic) {
      for (int j : js_or_default(k.js, c.n)) {
        validate(experiment(c, k.u, k.v, k.alpha, j));
      }
    }
    for (const auto& k : c.corollary) {
      validate(experiment(c, k.u, k.u, k.alpha, k.j));
    }
    for (const auto& k : c.scalar) {
      validate(experiment(c, k.u, k.v, k.alpha, k.j));
    }
  } catch (const ClassViolation& e) {
    throw ConfigError(std::string("class certification failed: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

VerificationReport scalar_report(std::string identity, int n, int j, double lhs, double rhs) {
  VerificationReport r;
  r.identity = std::move(identity);
  r.n = n;
  r.j = j;
  r.lhs = Vector::Constant(1, lhs);
  r.rhs = Vector::Constant(1, rhs);
  return r;
}

RadialDensity transform_density(const RunConfig& c, std::size_t i) {
  return c.transforms.densities.empty() ? RadialDensity::tent(kDefaultTents[i])
                                        : c.density(c.transforms.densities[i]);
}

std::size_t transform_count(const RunConfig& c) {
  return c.transforms.densities.empty() ? kDefaultTents.size() : c.transforms.densities.size();
}

double max_round_trip_error(const RadialDensity& xi, int m) {
  const RadialDensity back = R_power(R_power(xi, m), -m);
  const double top = xi.support_upper();
  double worst = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double r = top * 1.1 * i / 200.0;
    worst = std::max(worst, std::abs(back(r) - xi(r)));
  }
  return worst;
}

double max_kernel_gap(const KinematicKernel& kernel, double top, int grid) {
  double worst = 0.0;
  for (int a = 1; a <= grid; ++a) {
    for (int b = 1; b <= grid; ++b) {
      const double s = top * a / grid, t = top * b / grid;
      worst = std::max(worst, std::abs(kernel(s, t) - kernel.collapsed(s, t)));
    }
  }
  return worst;
}

using Job = std::function<std::vector<VerificationReport>()>;

struct NamedJob {
  std::string name;
  int n;
  int j;
  Job job;
};

void add_transform_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (std::size_t i = 0; i < transform_count(c); ++i) {
    for (int m : c.transforms.powers) {
      jobs.push_back({"transform_round_trip", c.n, m, [&c, i, m] {
                        const RadialDensity xi = transform_density(c, i);
                        VerificationReport r =
                            scalar_report("transform_round_trip", c.n, m, max_round_trip_error(xi, m), 0.0);
                        r.lhs_method = "R^-m R^m";
                        r.rhs_method = "identity";
                        r.abs_floor = c.tolerances.round_trip;
                        r.evaluate();
                        add_note(r, "sup over grid; density " + xi.description() + "; m = " + std::to_string(m));
                        return std::vector{r};
                      }});
    }
  }
  for (const auto& [n, k] : c.transforms.kernels) {
    jobs.push_back({"kernel_collapse", n, k, [&c, n, k] {
                      const RadialDensity alpha = transform_density(c, std::min<std::size_t>(2, transform_count(c) - 1));
                      const KinematicKernel kernel = kernel_make(alpha, n, k);
                      const double top = alpha.support_upper();
                      VerificationReport r = scalar_report("kernel_collapse", n, k,
                                                           max_kernel_gap(kernel, top, c.transforms.grid), 0.0);
                      r.lhs_method = "composite kernel";
                      r.rhs_method = "alpha(max(s,t))";
                      r.abs_floor = c.tolerances.kernel;
                      r.conjecture = true;
                      r.evaluate();
                      add_note(r, "max abs difference on a " + std::to_string(c.transforms.grid) + "x" +
                                      std::to_string(c.transforms.grid) + " grid; density " + alpha.description());
                      if (!r.pass) {
                        add_note(r, "collapse conjecture not confirmed");
                      }
                      return std::vector{r};
                    }});
  }
}

void add_measure_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& m : c.measures) {
    jobs.push_back({m.oracle ? "phi_oracle" : "ma_routes", c.n, m.j, [&c, m] {
                      MeasureQuery q{c.function(m.function), m.j, c.density(m.density), m.weight, std::nullopt,
                                     c.quadrature};
                      std::vector<VerificationReport> out;
                      if (m.oracle) {
                        const WeightedIntegral est =
                            phi_weighted_oracle(q.function, m.j, q.density, m.weight, c.oracle);
                        const WeightedIntegral ref = m.expected ? WeightedIntegral{m.weight, *m.expected}
                                                                : phi_integral(q, Route::Auto);
                        VerificationReport r;
                        r.identity = "phi_oracle";
                        r.n = c.n;
                        r.j = m.j;
                        r.lhs = est.value;
                        r.rhs = ref.value;
                        r.lhs_method = to_string(est.method);
                        r.rhs_method = m.expected ? "expected" : to_string(ref.method);
                        r.stderr_estimate = est.error_estimate;
                        r.samples = c.oracle.points;
                        r.seed = c.oracle.seed;
                        r.tolerance = c.tolerances.oracle;
                        r.evaluate();
                        add_note(r, m.function + ", " + q.density.description());
                        out.push_back(r);
                        return out;
                      }
                      const RouteComparison cmp = ma_j_routes(q, c.tolerances.route);
                      VerificationReport r;
                      r.identity = "ma_routes";
                      r.n = c.n;
                      r.j = m.j;
                      r.lhs = cmp.direct.value;
                      r.rhs = cmp.transform.value;
                      r.lhs_method = to_string(cmp.direct.method);
                      r.rhs_method = std::string("transform/") + to_string(cmp.transform.method);
                      r.stderr_estimate = std::hypot(cmp.direct.error_estimate, cmp.transform.error_estimate);
                      r.tolerance = c.tolerances.route;
                      r.abs_floor = 1e-10 + 3.0 * r.stderr_estimate;
                      r.evaluate();
                      add_note(r, m.function + ", " + q.density.description());
                      out.push_back(r);
                      if (m.expected) {
                        VerificationReport e = r;
                        e.identity = "ma_expected";
                        e.rhs = *m.expected;
                        e.rhs_method = "expected";
                        e.tolerance = c.tolerances.expected;
                        e.abs_floor = 1e-12;
                        e.notes.clear();
                        e.evaluate();
                        add_note(e, m.function + ", " + q.density.description());
                        out.push_back(e);
                      }
                      return out;
                    }});
  }
}

void add_valuation_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& v : c.valuations) {
    jobs.push_back({"valuation", c.n, v.j, [&c, v] {
                      const ConvexFunction& f = c.function(v.function);
                      const RadialDensity& xi = c.density(v.density);
                      ValuationOptions options{c.quadrature, c.oracle, c.tolerances.route};
                      VerificationReport r;
                      if (const auto* cone = std::get_if<Cone>(&f.variant())) {
                        const WeightedIntegral got = v_star(ValuationSpec::scalar(c.n, v.j, xi), f, options);
                        r = scalar_report("valuation_scalar", c.n, v.j, got.scalar(),
                                          closed_form_v_t(c.n, v.j, xi, cone->t));
                        r.lhs_method = to_string(got.method);
                        r.stderr_estimate = got.error_estimate;
                      } else if (const auto* half = std::get_if<HalfCone>(&f.variant())) {
                        const WeightedIntegral got = t_star(ValuationSpec::vector(c.n, v.j, xi), f, options);
                        r.identity = "valuation_vector";
                        r.n = c.n;
                        r.j = v.j;
                        r.lhs = got.value;
                        r.rhs = closed_form_w_s(c.n, v.j, xi, half->s);
                        r.lhs_method = to_string(got.method);
                        r.stderr_estimate = got.error_estimate;
                      } else {
                        r = minkowski_vanishing(f, v.j, xi, c.tolerances.vanishing, c.quadrature);
                        add_note(r, v.function);
                        return std::vector{r};
                      }
                      r.rhs_method = "closed_form";
                      r.tolerance = c.tolerances.valuation;
                      r.abs_floor = 1e-12;
                      r.evaluate();
                      add_note(r, v.function + ", " + xi.description());
                      return std::vector{r};
                    }});
  }
}

void add_appendix_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& a : c.appendix.cases) {
    jobs.push_back({"appendix_z", c.n, 0, [&c, a] {
                      const RadialDensity& xi = c.density(c.appendix.density);
                      const ConvexFunction f =
                          a.mu * ConvexFunction::half_cone(c.n, a.s) + a.lambda * ConvexFunction::cone(c.n, a.t);
                      const auto est = phi_weighted_oracle_all(f, {xi}, WeightKind::Vector, c.oracle);
                      std::vector<VerificationReport> out;
                      for (int j : appendix_js(c)) {
                        VerificationReport r;
                        r.identity = "appendix_z";
                        r.n = c.n;
                        r.j = j;
                        r.lhs = est[0][j].value;
                        r.rhs = z_closed_form(c.n, j, xi, a.mu, a.s, a.lambda, a.t);
                        r.lhs_method = to_string(est[0][j].method);
                        r.rhs_method = "closed_form";
                        r.stderr_estimate = est[0][j].error_estimate;
                        r.samples = c.oracle.points;
                        r.seed = c.oracle.seed;
                        r.tolerance = c.tolerances.appendix;
                        r.evaluate();
                        std::ostringstream note;
                        note << "mu=" << format_number(a.mu) << " s=" << format_number(a.s)
                             << " lambda=" << format_number(a.lambda) << " t=" << format_number(a.t)
                             << (a.s <= a.t ? " (s<=t)" : " (s>t)");
                        add_note(r, note.str());
                        out.push_back(r);
                      }
                      return out;
                    }});
  }
}

void add_kinematic_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& k : c.kinematic) {
    for (int j : js_or_default(k.js, c.n)) {
      jobs.push_back({"kinematic_vector", c.n, j, [&c, k, j] {
                        const KinematicExperiment exp = experiment(c, k.u, k.v, k.alpha, j);
                        VerificationReport r = main_theorem_report(
                            exp, k.monte_carlo ? c.tolerances.kinematic : c.tolerances.kinematic_closed);
                        if (k.monte_carlo) {
                          r.stderr_multiple = c.tolerances.stderr_multiple;
                          r.evaluate();
                        }
                        add_note(r, k.u + " + " + k.v + (k.monte_carlo ? ", monte carlo channel" : ", closed channel"));
                        return std::vector{r};
                      }});
    }
  }
}

void add_corollary_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& k : c.corollary) {
    jobs.push_back({"corollary", c.n, k.j, [&c, k] {
                      KinematicExperiment exp = experiment(c, k.u, k.u, k.alpha, k.j);
                      exp.v = support_of(k.body, c.n);
                      const SideResult lhs = lhs_vector(exp);
                      const WeightedIntegral rhs = corollary_rhs(c.n, k.j, exp.alpha, exp.u, k.body, c.quadrature);
                      VerificationReport r;
                      r.identity = "corollary";
                      r.n = c.n;
                      r.j = k.j;
                      r.lhs = lhs.value.value;
                      r.rhs = rhs.value;
                      r.lhs_method = to_string(lhs.value.method);
                      r.rhs_method = to_string(rhs.method);
                      r.stderr_estimate = std::hypot(lhs.combined_error(), rhs.error_estimate);
                      r.samples = lhs.samples;
                      r.seed = c.seed;
                      r.tolerance = c.tolerances.corollary;
                      r.evaluate();
                      add_note(r, lhs.notes);
                      return std::vector{r};
                    }});
  }
}

void add_scalar_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  for (const auto& k : c.scalar) {
    jobs.push_back({"kinematic_scalar", c.n, k.j, [&c, k] {
                      return std::vector{
                          scalar_kinematic(experiment(c, k.u, k.v, k.alpha, k.j), c.tolerances.scalar)};
                    }});
  }
}

void add_classical_jobs(const RunConfig& c, std::vector<NamedJob>& jobs) {
  std::vector<int> js = c.js;
  if (js.empty()) {
    for (int j = 0; j <= c.n; ++j) {
      js.push_back(j);
    }
  }
  for (int j : js) {
    jobs.push_back({"classical_kinematic_balls", c.n, j, [&c, j] {
                      VerificationReport r = classical_balls(c.n, j, c.classical.r1, c.classical.r2);
                      r.abs_floor = c.tolerances.classical;
                      r.evaluate();
                      return std::vector{r};
                    }});
  }
}

bool wants(const RunConfig& c, const std::string& suite, const std::string& name) {
  if (suite == name) {
    return true;
  }
  return suite == "all" && std::find(c.present.begin(), c.present.end(), name) != c.present.end();
}

std::vector<VerificationReport> run_job(const NamedJob& job, std::uint64_t seed) {
  try {
    return job.job();
  } catch (const Error& e) {
    VerificationReport r;
    r.identity = job.name;
    r.n = job.n;
    r.j = job.j;
    r.lhs = Vector::Constant(1, std::nan(""));
    r.rhs = Vector::Constant(1, std::nan(""));
    r.seed = seed;
    r.abs_err = std::nan("");
    r.rel_err = std::nan("");
    r.pass = false;
    add_note(r, std::string("error: ") + e.what());
    return {r};
  }
}

}  // namespace

const RadialDensity& RunConfig::density(const std::string& name) const {
  const auto it = densities.find(name);
  if (it == densities.end()) {
    throw ConfigError("unknown density '" + name + "'");
  }
  return it->second;
}

const ConvexFunction& RunConfig::function(const std::string& name) const {
  const auto it = functions.find(name);
  if (it == functions.end()) {
    throw ConfigError("unknown function '" + name + "'");
  }
  return it->second;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"transforms", "measures", "valuations", "appendix", "kinematic",
                                              "corollary",  "scalar",   "classical",  "all"};
  return names;
}

RunConfig parse_config(const std::string& text, const std::optional<std::string>& seed_override) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) {
      throw ConfigError("config: expected a JSON object");
    }
    c.suite = j.value("suite", std::string("all"));
    if (std::find(suite_names().begin(), suite_names().end(), c.suite) == suite_names().end()) {
      throw ConfigError("config: unknown suite '" + c.suite + "'");
    }
    c.n = j.value("n", 2);
    if (j.contains("j")) {
      c.js = j.at("j").is_array() ? j.at("j").get<std::vector<int>>() : std::vector<int>{j.at("j").get<int>()};
    }
    if (!j.contains("seed")) {
      throw ConfigError("config: 'seed' is mandatory");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    if (seed_override) {
      try {
        std::size_t used = 0;
        c.seed = std::stoull(*seed_override, &used);
        if (used != seed_override->size()) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::exception&) {
        throw ConfigError("SEED environment variable is not an unsigned integer: '" + *seed_override + "'");
      }
      c.seed_from_environment = true;
    }
    c.rotations = j.value("rotations", 200);
    c.output_dir = j.value("output", std::string("out"));
    c.plots = j.value("plots", false);

    c.oracle.seed = c.seed;
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle.points = o.value("points", c.oracle.points);
      c.oracle.replicates = o.value("replicates", c.oracle.replicates);
      if (o.contains("nodes")) {
        c.oracle.nodes = o.at("nodes").get<std::vector<double>>();
      }
    }
    if (j.contains("quadrature")) {
      const auto& q = j.at("quadrature");
      c.quadrature.radial_nodes = q.value("radial_nodes", c.quadrature.radial_nodes);
      c.quadrature.angular_nodes = q.value("angular_nodes", c.quadrature.angular_nodes);
      c.quadrature.polar_nodes = q.value("polar_nodes", c.quadrature.polar_nodes);
      c.quadrature.cutoff_fraction = q.value("cutoff_fraction", c.quadrature.cutoff_fraction);
    }
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      auto& tol = c.tolerances;
      for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
               {"round_trip", &tol.round_trip},
               {"kernel", &tol.kernel},
               {"classical", &tol.classical},
               {"route", &tol.route},
               {"expected", &tol.expected},
               {"oracle", &tol.oracle},
               {"valuation", &tol.valuation},
               {"vanishing", &tol.vanishing},
               {"appendix", &tol.appendix},
               {"kinematic_closed", &tol.kinematic_closed},
               {"kinematic", &tol.kinematic},
               {"stderr_multiple", &tol.stderr_multiple},
               {"scalar", &tol.scalar},
               {"corollary", &tol.corollary}}) {
        *field = t.value(key, *field);
        if (!(*field >= 0.0)) {
          throw ConfigError(std::string("tolerances: '") + key + "' must be nonnegative");
        }
      }
      for (auto it = t.begin(); it != t.end(); ++it) {
        static const std::vector<std::string> known{"round_trip", "kernel",          "classical",      "route",
                                                    "expected",   "oracle",          "valuation",      "vanishing",
                                                    "appendix",   "kinematic_closed", "kinematic",     "stderr_multiple",
                                                    "scalar",     "corollary"};
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
          throw ConfigError("tolerances: unknown key '" + it.key() + "'");
        }
      }
    }

    if (j.contains("densities")) {
      for (auto it = j.at("densities").begin(); it != j.at("densities").end(); ++it) {
        try {
          c.densities.emplace(it.key(), density_from(it.value()));
        } catch (const ConfigError& e) {
          throw ConfigError("density '" + it.key() + "': " + e.what());
        }
      }
    }
    if (j.contains("functions")) {
      for (auto it = j.at("functions").begin(); it != j.at("functions").end(); ++it) {
        try {
          c.functions.emplace(it.key(), function_from(it.value()));
        } catch (const ConfigError& e) {
          throw ConfigError("function '" + it.key() + "': " + e.what());
        }
      }
    }

    Resolver resolve(c);
    if (j.contains("transforms")) {
      c.present.push_back("transforms");
      const auto& t = j.at("transforms");
      if (t.contains("densities")) {
        for (const auto& d : t.at("densities")) {
          c.transforms.densities.push_back(resolve.density(d));
        }
      }
      if (t.contains("powers")) {
        c.transforms.powers = t.at("powers").get<std::vector<int>>();
      }
      if (t.contains("kernels")) {
        c.transforms.kernels.clear();
        for (const auto& p : t.at("kernels")) {
          c.transforms.kernels.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        }
      }
      c.transforms.grid = t.value("grid", c.transforms.grid);
      for (const auto& [n, k] : c.transforms.kernels) {
        if (n < 2 || n > 3 || k < 1 || k > n) {
          throw ConfigError("transforms: kernel needs 2 <= n <= 3 and 1 <= k <= n");
        }
      }
      for (int m : c.transforms.powers) {
        if (m < 1) {
          throw ConfigError("transforms: powers must be positive");
        }
      }
    }
    if (j.contains("measures")) {
      c.present.push_back("measures");
      for (const auto& m : j.at("measures")) {
        MeasureCase mc;
        mc.function = resolve.function(m.at("function"));
        mc.j = m.at("j").get<int>();
        mc.density = resolve.density(m.at("density"));
        mc.weight = weight_from(m.value("weight", std::string("scalar")));
        mc.oracle = m.value("route", std::string("deterministic")) == "oracle";
        if (m.contains("expected")) {
          mc.expected = m.at("expected").is_number() ? Vector::Constant(1, m.at("expected").get<double>())
                                                     : to_vector(m.at("expected"));
        }
        c.measures.push_back(mc);
      }
    }
    if (j.contains("valuations")) {
      c.present.push_back("valuations");
      for (const auto& v : j.at("valuations")) {
        c.valuations.push_back(
            {resolve.function(v.at("function")), v.at("j").get<int>(), resolve.density(v.at("density"))});
      }
    }
    if (j.contains("appendix")) {
      c.present.push_back("appendix");
      const auto& a = j.at("appendix");
      c.appendix.density = resolve.density(a.at("density"));
      for (const auto& p : a.at("cases")) {
        c.appendix.cases.push_back(
            {p.value("mu", 1.0), p.at("s").get<double>(), p.value("lambda", 1.0), p.at("t").get<double>()});
      }
      if (c.appendix.cases.empty()) {
        throw ConfigError("appendix: no cases");
      }
      if (a.contains("j")) {
        c.appendix.js =
            a.at("j").is_array() ? a.at("j").get<std::vector<int>>() : std::vector<int>{a.at("j").get<int>()};
        for (int j : c.appendix.js) {
          if (j < 1 || j > c.n) {
            throw ConfigError("appendix: j must be in 1..n");
          }
        }
      }
    }
    if (j.contains("kinematic")) {
      c.present.push_back("kinematic");
      for (const auto& k : j.at("kinematic")) {
        KinematicCase kc;
        kc.u = resolve.function(k.at("u"));
        kc.v = resolve.function(k.at("v"));
        kc.alpha = resolve.density(k.at("alpha"));
        if (k.contains("j")) {
          kc.js = k.at("j").is_array() ? k.at("j").get<std::vector<int>>() : std::vector<int>{k.at("j").get<int>()};
        }
        const auto channel = k.value("channel", std::string("closed"));
        if (channel != "closed" && channel != "monte_carlo") {
          throw ConfigError("kinematic: channel must be 'closed' or 'monte_carlo'");
        }
        kc.monte_carlo = channel == "monte_carlo";
        c.kinematic.push_back(kc);
      }
    }
    if (j.contains("corollary")) {
      c.present.push_back("corollary");
      for (const auto& k : j.at("corollary")) {
        CorollaryCase cc;
        cc.u = resolve.function(k.at("u"));
        cc.body = k.contains("body") ? body_from(k.at("body")) : Body{BallBody{1.0}};
        cc.alpha = resolve.density(k.at("alpha"));
        cc.j = k.value("j", 2);
        c.corollary.push_back(cc);
      }
    }
    if (j.contains("scalar")) {
      c.present.push_back("scalar");
      for (const auto& k : j.at("scalar")) {
        c.scalar.push_back({resolve.function(k.at("u")), resolve.function(k.at("v")),
                            resolve.density(k.at("alpha")), k.value("j", 1)});
      }
    }
    if (j.contains("classical")) {
      c.present.push_back("classical");
      c.classical.r1 = j.at("classical").value("r1", 1.0);
      c.classical.r2 = j.at("classical").value("r2", 1.0);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + file.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  std::optional<std::string> seed;
  if (const char* env = std::getenv("SEED"); env != nullptr && *env != '\0') {
    seed = env;
  }
  return parse_config(text.str(), seed);
}

ConvexFunction parse_function(const std::string& json_text) {
  try {
    return function_from(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("function: ") + e.what());
  }
}

std::string function_to_json(const ConvexFunction& f) { return function_json(f).dump(); }

RadialDensity parse_density(const std::string& json_text) {
  try {
    return density_from(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("density: ") + e.what());
  }
}

std::string density_to_json(const RadialDensity& xi) {
  if (const auto pw = xi.piecewise()) {
    return json{{"knots", pw->first}, {"values", pw->second}}.dump();
  }
  return json{{"description", xi.description()}}.dump();
}

std::vector<VerificationReport> run_suite(const RunConfig& config, const std::string& suite, bool parallel) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
    throw ConfigError("unknown suite '" + suite + "'");
  }
  std::vector<NamedJob> jobs;
  if (wants(config, suite, "transforms")) {
    add_transform_jobs(config, jobs);
  }
  if (wants(config, suite, "measures")) {
    add_measure_jobs(config, jobs);
  }
  if (wants(config, suite, "valuations")) {
    add_valuation_jobs(config, jobs);
  }
  if (wants(config, suite, "appendix")) {
    add_appendix_jobs(config, jobs);
  }
  if (wants(config, suite, "kinematic")) {
    add_kinematic_jobs(config, jobs);
  }
  if (wants(config, suite, "corollary")) {
    add_corollary_jobs(config, jobs);
  }
  if (wants(config, suite, "scalar")) {
    add_scalar_jobs(config, jobs);
  }
  if (wants(config, suite, "classical")) {
    add_classical_jobs(config, jobs);
  }
  if (jobs.empty()) {
    throw ConfigError("suite '" + suite + "' has no cases in this config");
  }

  std::vector<std::vector<VerificationReport>> results(jobs.size());
  if (parallel) {
    std::vector<std::future<std::vector<VerificationReport>>> futures;
    for (const auto& job : jobs) {
      futures.push_back(std::async(std::launch::async, run_job, std::cref(job), config.seed));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      results[i] = futures[i].get();
    }
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      results[i] = run_job(jobs[i], config.seed);
    }
  }
  std::vector<VerificationReport> reports;
  for (auto& batch : results) {
    for (auto& r : batch) {
      if (config.seed_from_environment) {
        add_note(r, "seed " + std::to_string(config.seed) + " taken from the SEED environment variable");
      }
      if (r.seed == 0) {
        r.seed = config.seed;
      }
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

bool all_pass(const std::vector<VerificationReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass || r.conjecture; });
}

void write_kernel_plot(const RadialDensity& alpha, int n, int k, double t, const std::filesystem::path& file,
                       double s_max, int samples) {
  const KinematicKernel kernel = kernel_make(alpha, n, k);
  Polyline composite{"kernel(s, t)", {}};
  Polyline collapsed{"alpha(max(s, t))", {}};
  for (int i = 1; i <= samples; ++i) {
    const double s = s_max * i / samples;
    composite.points.emplace_back(s, kernel(s, t));
    collapsed.points.emplace_back(s, kernel.collapsed(s, t));
  }
  write_svg({composite, collapsed},
            "kernel n=" + std::to_string(n) + " k=" + std::to_string(k) + " t=" + format_number(t), file);
}

int run(const std::filesystem::path& config_file, const RunOptions& options) {
  RunConfig config;
  std::vector<VerificationReport> reports;
  try {
    config = load_config(config_file);
    if (options.output_dir) {
      config.output_dir = *options.output_dir;
    }
    reports = run_suite(config, options.suite.value_or(config.suite), options.parallel);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    write_csv(reports, config.output_dir / "report.csv");
    write_json(reports, config.output_dir / "report.json");
    if (config.plots) {
      for (const auto& [name, xi] : config.densities) {
        Polyline line{name, {}};
        const double top = xi.support_upper() * 1.2;
        for (int i = 1; i <= 200; ++i) {
          line.points.emplace_back(top * i / 200, xi(top * i / 200));
        }
        write_svg({line}, "density " + name, config.output_dir / ("density_" + name + ".svg"));
      }
      for (const auto& [n, k] : config.transforms.kernels) {
        write_kernel_plot(transform_density(config, std::min<std::size_t>(2, transform_count(config) - 1)), n, k,
                          0.6, config.output_dir / ("kernel_n" + std::to_string(n) + "_k" + std::to_string(k) + ".svg"));
      }
    }
  } catch (const Error& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return 2;
  }
  for (const auto& r : reports) {
    std::cout << (r.pass ? "PASS " : (r.conjecture ? "FLAG " : "FAIL ")) << r.identity << " n=" << r.n
              << " j=" << r.j << " abs_err=" << format_number(r.abs_err) << " rel_err=" << format_number(r.rel_err)
              << '\n';
  }
  return all_pass(reports) ? 0 : 1;
}

}  // namespace kin
