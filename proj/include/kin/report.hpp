#pragma once

// Verification records and their CSV/JSON/SVG serialization.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kin/numerics.hpp"

namespace kin {

struct VerificationReport {
  std::string identity;
  int n = 0;
  int j = 0;
  Vector lhs;
  Vector rhs;
  std::string lhs_method;
  std::string rhs_method;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double stderr_estimate = 0.0;  // Monte Carlo and quadrature, combined
  long samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;        // relative
  double abs_floor = 0.0;        // absolute, for vanishing identities
  double stderr_multiple = 0.0;  // > 0: also require abs_err <= multiple * stderr
  bool pass = false;
  bool conjecture = false;  // flagged on failure, never fails a run
  std::string notes;

  // Fills abs_err, rel_err and pass from lhs, rhs and the tolerances.
  void evaluate();
};

void add_note(VerificationReport& r, const std::string& note);

// Fixed-precision number formatting shared by every writer.
std::string format_number(double v);

void write_csv(const std::vector<VerificationReport>& reports, const std::filesystem::path& file);
void write_json(const std::vector<VerificationReport>& reports, const std::filesystem::path& file);

struct Polyline {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void write_svg(const std::vector<Polyline>& lines, const std::string& title, const std::filesystem::path& file);

}  // namespace kin
