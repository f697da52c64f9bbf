#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kin/config.hpp"
#include "kin/measures.hpp"

namespace {

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw kin::ConfigError("cannot read " + file);
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json to_json(const kin::WeightedIntegral& w) {
  nlohmann::json v = nlohmann::json::array();
  for (long i = 0; i < w.value.size(); ++i) {
    v.push_back(w.value(i));
  }
  return {{"value", v}, {"method", kin::to_string(w.method)}, {"error_estimate", w.error_estimate}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of functional kinematic formulas"};
  app.require_subcommand(1);

  std::string config_file, suite, out_dir;
  bool parallel = false;
  auto* verify = app.add_subcommand("verify", "Run the suites of a JSON config and write report.csv/report.json");
  verify->add_option("config", config_file, "Config file")->required();
  verify->add_option("--suite", suite, "Suite to run instead of the config's")
      ->check(CLI::IsMember(kin::suite_names()));
  verify->add_flag("--parallel", parallel, "Run independent experiments concurrently");
  verify->add_option("--out", out_dir, "Output directory");

  int plot_n = 2, plot_k = 1;
  double plot_t = 0.6, plot_smax = 1.5;
  std::string plot_density, plot_out = "kernel.svg";
  auto* plot = app.add_subcommand("kernel-plot", "Plot the kinematic kernel against its collapsed form");
  plot->add_option("--n", plot_n, "Dimension")->check(CLI::Range(2, 4));
  plot->add_option("--k", plot_k, "Index")->check(CLI::Range(1, 4));
  plot->add_option("--density", plot_density, "Density JSON file")->required();
  plot->add_option("--t", plot_t, "Fixed second argument");
  plot->add_option("--s-max", plot_smax, "Upper end of the s range");
  plot->add_option("--out", plot_out, "SVG file");

  std::string fn_file, density_file, weight = "scalar", route = "auto";
  int j = 1;
  long points = 100000;
  std::uint64_t seed = 1;
  auto* measure = app.add_subcommand("measure", "Weighted integrals of Phi_j and MA_j");
  measure->add_option("--function", fn_file, "Function JSON file")->required();
  measure->add_option("--j", j, "Index")->required();
  measure->add_option("--density", density_file, "Density JSON file")->required();
  measure->add_option("--weight", weight, "scalar or vector")->check(CLI::IsMember({"scalar", "vector"}));
  measure->add_option("--route", route, "auto, smooth, closed or oracle")
      ->check(CLI::IsMember({"auto", "smooth", "closed", "oracle"}));
  measure->add_option("--points", points, "Oracle sample points");
  measure->add_option("--seed", seed, "Oracle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (verify->parsed()) {
    kin::RunOptions options;
    if (!suite.empty()) {
      options.suite = suite;
    }
    options.parallel = parallel;
    if (!out_dir.empty()) {
      options.output_dir = out_dir;
    }
    return kin::run(config_file, options);
  }

  try {
    if (plot->parsed()) {
      if (plot_k > plot_n) {
        throw kin::ConfigError("kernel-plot: k must not exceed n");
      }
      const auto alpha = kin::parse_density(slurp(plot_density));
      kin::write_kernel_plot(alpha, plot_n, plot_k, plot_t, plot_out, plot_smax);
      std::cout << plot_out << '\n';
      return 0;
    }
    if (measure->parsed()) {
      const auto f = kin::parse_function(slurp(fn_file));
      const auto xi = kin::parse_density(slurp(density_file));
      kin::MeasureQuery q{f, j, xi, weight == "scalar" ? kin::WeightKind::Scalar : kin::WeightKind::Vector,
                          std::nullopt, {}};
      kin::OracleSettings oracle;
      oracle.points = points;
      oracle.seed = seed;
      const kin::Route r = route == "smooth"   ? kin::Route::SmoothQuadrature
                           : route == "closed" ? kin::Route::ClosedForm
                           : route == "oracle" ? kin::Route::Oracle
                                               : kin::Route::Auto;
      nlohmann::json out{{"function", nlohmann::json::parse(kin::function_to_json(f))}, {"j", j}, {"weight", weight}};
      out["phi"] = to_json(kin::phi_integral(q, r, oracle));
      try {
        out["ma"] = to_json(r == kin::Route::Oracle ? kin::ma_j_transform(q, r, oracle)
                                                     : kin::ma_j_integral(q, oracle));
      } catch (const kin::ClassViolation& e) {
        out["ma"] = {{"error", e.what()}};
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }
  } catch (const kin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const kin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
