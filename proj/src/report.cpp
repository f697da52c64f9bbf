#include "kin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace kin {

void VerificationReport::evaluate() {
  if (lhs.size() != rhs.size()) {
    throw DomainError("report: lhs and rhs differ in length");
  }
  abs_err = (lhs - rhs).norm();
  const double scale = rhs.norm();
  rel_err = scale > 0.0 ? abs_err / scale : (abs_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  const bool floor_ok = abs_err <= abs_floor;
  bool ok = floor_ok || rel_err <= tolerance;
  if (stderr_multiple > 0.0 && !floor_ok) {
    ok = ok && abs_err <= stderr_multiple * stderr_estimate;
  }
  pass = ok;
}

void add_note(VerificationReport& r, const std::string& note) {
  if (note.empty()) {
    return;
  }
  if (!r.notes.empty()) {
    r.notes += "; ";
  }
  r.notes += note;
}

std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + file.string());
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string q = "\"";
  for (char c : s) {
    q += c;
    if (c == '"') {
      q += '"';
    }
  }
  return q + "\"";
}

}  // namespace

void write_csv(const std::vector<VerificationReport>& reports, const std::filesystem::path& file) {
  long width = 1;
  for (const auto& r : reports) {
    width = std::max<long>(width, std::max(r.lhs.size(), r.rhs.size()));
  }
  std::ofstream out = open_for_write(file);
  out << "identity,n,j";
  for (long i = 0; i < width; ++i) {
    out << ",lhs_" << i;
  }
  for (long i = 0; i < width; ++i) {
    out << ",rhs_" << i;
  }
  out << ",abs_err,rel_err,stderr,samples,seed,pass\n";
  for (const auto& r : reports) {
    out << csv_field(r.identity) << ',' << r.n << ',' << r.j;
    for (long i = 0; i < width; ++i) {
      out << ',' << (i < r.lhs.size() ? format_number(r.lhs(i)) : "");
    }
    for (long i = 0; i < width; ++i) {
      out << ',' << (i < r.rhs.size() ? format_number(r.rhs(i)) : "");
    }
    out << ',' << format_number(r.abs_err) << ',' << format_number(r.rel_err) << ','
        << format_number(r.stderr_estimate) << ',' << r.samples << ',' << r.seed << ','
        << (r.pass ? "true" : "false") << '\n';
  }
}

void write_json(const std::vector<VerificationReport>& reports, const std::filesystem::path& file) {
  auto vec = [](const Vector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (long i = 0; i < v.size(); ++i) {
      a.push_back(v(i));
    }
    return a;
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    arr.push_back({{"identity", r.identity},
                   {"n", r.n},
                   {"j", r.j},
                   {"lhs", vec(r.lhs)},
                   {"rhs", vec(r.rhs)},
                   {"lhs_method", r.lhs_method},
                   {"rhs_method", r.rhs_method},
                   {"abs_err", r.abs_err},
                   {"rel_err", std::isfinite(r.rel_err) ? nlohmann::json(r.rel_err) : nlohmann::json(nullptr)},
                   {"stderr", r.stderr_estimate},
                   {"samples", r.samples},
                   {"seed", r.seed},
                   {"tolerance", r.tolerance},
                   {"abs_floor", r.abs_floor},
                   {"pass", r.pass},
                   {"conjecture", r.conjecture},
                   {"notes", r.notes}});
  }
  std::ofstream out = open_for_write(file);
  out << arr.dump(2) << '\n';
}

void write_svg(const std::vector<Polyline>& lines, const std::string& title, const std::filesystem::path& file) {
  if (lines.empty()) {
    return;
  }
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& l : lines) {
    for (const auto& [x, y] : l.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        continue;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) {
    x1 = x0 + 1.0;
  }
  if (!(y1 > y0)) {
    y1 = y0 + 1.0;
  }
  const double w = 640, h = 400, pad = 50;
  auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (w - 2 * pad); };
  auto py = [&](double y) { return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream out = open_for_write(file);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << pad << "\" y=\"" << h - pad + 16 << "\" font-size=\"11\">" << format_number(x0)
      << "</text>\n";
  out << "<text x=\"" << w - pad << "\" y=\"" << h - pad + 16 << "\" font-size=\"11\" text-anchor=\"end\">"
      << format_number(x1) << "</text>\n";
  out << "<text x=\"" << pad - 4 << "\" y=\"" << pad << "\" font-size=\"11\" text-anchor=\"end\">"
      << format_number(y1) << "</text>\n";
  out << "<text x=\"" << pad - 4 << "\" y=\"" << h - pad << "\" font-size=\"11\" text-anchor=\"end\">"
      << format_number(y0) << "</text>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char* color = colors[i % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (i == 0 ? 2.5 : 1.5)
        << "\"" << (i > 0 ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (const auto& [x, y] : lines[i].points) {
      if (std::isfinite(x) && std::isfinite(y)) {
        out << px(x) << ',' << py(y) << ' ';
      }
    }
    out << "\"/>\n";
    out << "<text x=\"" << w - pad - 150 << "\" y=\"" << pad + 16 * i << "\" font-size=\"12\" fill=\"" << color
        << "\">" << lines[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace kin
