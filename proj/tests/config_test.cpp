#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kin/config.hpp"

using namespace kin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kin-config-test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("function descriptions round trip") {
  const std::vector<std::string> docs{
      R"({"variant":"cone","t":1.0,"n":2})",
      R"({"variant":"half_cone","s":0.5,"n":3})",
      R"({"variant":"quadratic","center":[0,0.7],"scale":0.5})",
      R"({"variant":"quartic_norm","center":[0.5,0]})",
      R"({"variant":"support_ellipse","shape":[[1,0],[0,4]]})",
      R"({"variant":"support_segment","half_length":1,"direction":[1,0],"center":[0,0]})",
      R"({"variant":"combination","terms":[{"coefficient":2,"function":{"variant":"norm","n":2}},)"
      R"({"coefficient":0.5,"function":{"variant":"cone","t":1,"n":2}}]})",
      R"({"variant":"rotated","rotation":[[0,-1],[1,0]],"function":{"variant":"half_cone","s":1,"n":2}})"};
  for (const auto& d : docs) {
    const ConvexFunction f = parse_function(d);
    const ConvexFunction g = parse_function(function_to_json(f));
    CHECK(function_to_json(g) == function_to_json(f));
    Vector x(f.dim());
    x.setConstant(0.37);
    x(0) = -1.2;
    CHECK(eval(f, x) == eval(g, x));
  }
  CHECK_THROWS_AS(parse_function(R"({"variant":"blob"})"), ConfigError);
  CHECK_THROWS_AS(parse_function(R"({"variant":"cone","t":-1,"n":2})"), ConfigError);
  CHECK_THROWS_AS(parse_function("[1,2"), ConfigError);
}

TEST_CASE("density descriptions") {
  const auto d = parse_density(R"({"knots":[0,1.5],"values":[1.5,0]})");
  CHECK(d(1.0) == doctest::Approx(0.5));
  CHECK(parse_density(density_to_json(d))(0.7) == d(0.7));
  CHECK(parse_density(R"({"tent":2})")(1.0) == doctest::Approx(1.0));
  try {
    parse_density(R"({"knots":[0,1],"values":[1,0.5]})");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bounded support") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config(R"({"suite":"classical","n":2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"suite":"bogus","n":2,"seed":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"suite":"classical","n":7,"seed":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"suite":"classical","n":2,"seed":1,"tolerances":{"typo":1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"suite":"classical","n":2,"seed":1,"tolerances":{"route":-1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seed":1,"n":2,"functions":{"f":{"variant":"norm","n":3}}})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"seed":1,"n":2,"kinematic":[{"u":"missing","v":"missing","alpha":{"tent":1}}]})"),
      ConfigError);
  // alpha(s) s must vanish at 0
  CHECK_THROWS_AS(parse_config(R"({"seed":1,"n":2,"functions":{"q":{"variant":"norm","n":2}},)"
                               R"("scalar":[{"u":"q","v":"q","alpha":{"neg_log":1},"j":3}]})"),
                  ConfigError);
  const auto c = parse_config(R"({"suite":"classical","n":2,"seed":5})");
  CHECK(c.seed == 5);
  CHECK_FALSE(c.seed_from_environment);
  const auto o = parse_config(R"({"suite":"classical","n":2,"seed":5})", std::string("17"));
  CHECK(o.seed == 17);
  CHECK(o.seed_from_environment);
  CHECK_THROWS_AS(parse_config(R"({"suite":"classical","n":2,"seed":5})", std::string("x1")), ConfigError);
  const auto reports = run_suite(o, "classical");
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].seed == 17);
  CHECK(reports[0].notes.find("SEED") != std::string::npos);
}

TEST_CASE("appendix section takes its own j-list") {
  const std::string head = R"({"n":2,"seed":1,"j":[0,1,2],"densities":{"t":{"tent":1.5}},)";
  CHECK_THROWS_WITH_AS(parse_config(head + R"("appendix":{"density":"t","cases":[{"s":1,"t":0.5}]}})"),
                       doctest::Contains("appendix"), ConfigError);
  const auto c = parse_config(head + R"("appendix":{"density":"t","j":[2],"cases":[{"s":1,"t":0.5}]}})");
  CHECK(c.appendix.js == std::vector<int>{2});
  CHECK_THROWS_AS(parse_config(head + R"("appendix":{"density":"t","j":[3],"cases":[{"s":1,"t":0.5}]}})"),
                  ConfigError);
}

TEST_CASE("report writers") {
  const fs::path dir = scratch("writers");
  VerificationReport r;
  r.identity = "unit";
  r.n = 2;
  r.j = 1;
  r.lhs = Vector::Constant(1, 1.0);
  r.rhs = Vector::Constant(1, 1.0);
  r.seed = 3;
  r.evaluate();
  CHECK(r.pass);
  write_csv({r}, dir / "report.csv");
  const std::string csv = read(dir / "report.csv");
  CHECK(csv.rfind("identity,n,j,lhs_0,rhs_0,abs_err,rel_err,stderr,samples,seed,pass\n", 0) == 0);
  CHECK(csv.find(",true\n") != std::string::npos);
  write_json({r}, dir / "report.json");
  CHECK(read(dir / "report.json").find("\"pass\": true") != std::string::npos);
  write_svg({}, "nothing", dir / "empty.svg");
  CHECK_FALSE(fs::exists(dir / "empty.svg"));
  write_kernel_plot(RadialDensity::tent(1.0), 2, 1, 0.6, dir / "kernel.svg");
  const std::string svg = read(dir / "kernel.svg");
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("alpha(max(s, t))") != std::string::npos);
}

TEST_CASE("conjecture reports never fail a run") {
  VerificationReport ok, flagged;
  ok.pass = true;
  flagged.pass = false;
  flagged.conjecture = true;
  CHECK(all_pass({ok, flagged}));
  VerificationReport bad;
  CHECK_FALSE(all_pass({ok, bad}));
}

TEST_CASE("exit codes and reproducibility") {
  const fs::path dir = scratch("run");
  write(dir / "classical.json", R"({"suite":"classical","n":2,"seed":1})");
  write(dir / "bad.json", R"({"suite":"transforms","n":2,"seed":1,"densities":{"d":{"knots":[0,1],"values":[1,1]}}})");
  write(dir / "failing.json", R"({"suite":"transforms","n":2,"seed":1,"transforms":{"powers":[3]},)"
                              R"("tolerances":{"round_trip":0}})");
  RunOptions opts;
  opts.output_dir = dir / "out";
  CHECK(run(dir / "classical.json", opts) == 0);
  CHECK(fs::exists(dir / "out" / "report.csv"));
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(run(dir / "bad.json", opts) == 2);
  CHECK(run(dir / "missing.json", opts) == 2);
  CHECK(run(dir / "failing.json", opts) == 1);

  write(dir / "tr.json", R"({"suite":"transforms","n":2,"seed":9,"transforms":{"powers":[1,2]}})");
  opts.output_dir = dir / "a";
  CHECK(run(dir / "tr.json", opts) == 0);
  opts.output_dir = dir / "b";
  opts.parallel = true;
  CHECK(run(dir / "tr.json", opts) == 0);
  CHECK(read(dir / "a" / "report.csv") == read(dir / "b" / "report.csv"));
}
