#pragma once

// JSON run configurations and the suite runners behind the `verify` command.
// A config names densities and functions once and refers to them by name in
// the suite sections; every number in a report follows from the file and the
// seed alone.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kin/kinematics.hpp"
#include "kin/measures.hpp"
#include "kin/report.hpp"
#include "kin/transforms.hpp"

namespace kin {

struct Tolerances {
  double round_trip = 1e-8;
  double kernel = 1e-8;
  double classical = 1e-12;
  double route = 0.01;
  double expected = 1e-3;
  double oracle = 0.03;
  double valuation = 0.01;
  double vanishing = 1e-4;
  double appendix = 0.03;
  double kinematic_closed = 0.02;
  double kinematic = 0.03;
  double stderr_multiple = 3.0;
  double scalar = 0.01;
  double corollary = 0.03;
};

struct TransformSuite {
  std::vector<std::string> densities;  // empty: five default tents
  std::vector<int> powers{1, 2, 3};
  std::vector<std::pair<int, int>> kernels{{2, 1}, {3, 1}, {3, 2}};
  int grid = 50;
};

struct MeasureCase {
  std::string function;
  int j = 1;
  std::string density;
  WeightKind weight = WeightKind::Scalar;
  bool oracle = false;  // Phi_j by the prox oracle instead of the MA routes
  std::optional<Vector> expected;
};

struct ValuationCase {
  std::string function;
  int j = 1;
  std::string density;
};

struct AppendixCase {
  double mu = 1.0;
  double s = 1.0;
  double lambda = 1.0;
  double t = 1.0;
};

struct AppendixSuite {
  std::string density;
  std::vector<AppendixCase> cases;
  std::vector<int> js;  // empty: the config's j-list
};

struct KinematicCase {
  std::string u;
  std::string v;
  std::string alpha;
  std::vector<int> js;
  bool monte_carlo = false;
};

struct CorollaryCase {
  std::string u;
  Body body = BallBody{1.0};
  std::string alpha;
  int j = 2;
};

struct ScalarCase {
  std::string u;
  std::string v;
  std::string alpha;
  int j = 1;
};

struct ClassicalSuite {
  double r1 = 1.0;
  double r2 = 1.0;
};

struct RunConfig {
  std::string suite = "all";
  int n = 2;
  std::vector<int> js;
  std::map<std::string, RadialDensity> densities;
  std::map<std::string, ConvexFunction> functions;
  int rotations = 200;
  std::uint64_t seed = 0;
  bool seed_from_environment = false;
  Tolerances tolerances;
  QuadratureSettings quadrature;
  OracleSettings oracle;
  std::filesystem::path output_dir = "out";
  bool plots = false;

  TransformSuite transforms;
  std::vector<MeasureCase> measures;
  std::vector<ValuationCase> valuations;
  AppendixSuite appendix;
  std::vector<KinematicCase> kinematic;
  std::vector<CorollaryCase> corollary;
  std::vector<ScalarCase> scalar;
  ClassicalSuite classical;
  std::vector<std::string> present;  // suite sections given in the file

  const RadialDensity& density(const std::string& name) const;
  const ConvexFunction& function(const std::string& name) const;
};

const std::vector<std::string>& suite_names();

// Parses and validates; class tags are certified here. `seed_override` is
// the value of the SEED environment variable when set. Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::optional<std::string>& seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& file);

ConvexFunction parse_function(const std::string& json_text);
std::string function_to_json(const ConvexFunction& f);
RadialDensity parse_density(const std::string& json_text);
std::string density_to_json(const RadialDensity& xi);

std::vector<VerificationReport> run_suite(const RunConfig& config, const std::string& suite, bool parallel = false);

// Conjecture reports are excluded.
bool all_pass(const std::vector<VerificationReport>& reports);

struct RunOptions {
  std::optional<std::string> suite;
  bool parallel = false;
  std::optional<std::filesystem::path> output_dir;
};

// Exit code: 0 all pass, 1 a verification failed, 2 the config is invalid.
int run(const std::filesystem::path& config_file, const RunOptions& options = {});

// kernel(s, t) over s in (0, s_max] against alpha(max(s, t)).
void write_kernel_plot(const RadialDensity& alpha, int n, int k, double t, const std::filesystem::path& file,
                       double s_max = 1.5, int samples = 150);

}  // namespace kin
