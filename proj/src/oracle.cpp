#include "kin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kin {

SteinerEstimate steiner_moments(const ConvexFunction& f, const OracleWeight& weight, const OracleSettings& settings) {
  const int n = f.dim();
  const int width = weight.width;
  const auto& nodes = settings.nodes;
  if (static_cast<int>(nodes.size()) < n) {
    throw DomainError("oracle: need at least n step sizes");
  }
  if (settings.replicates < 2 || settings.points < settings.replicates) {
    throw DomainError("oracle: need at least two replicates and one point per replicate");
  }
  const double s_max = *std::max_element(nodes.begin(), nodes.end());
  const double support = weight.support_radius;
  const double lip = lipschitz_bound(f, support);
  const double half = support + s_max * lip;

  const long per_replicate = settings.points / settings.replicates;
  const int m = std::max(1, static_cast<int>(std::ceil(std::pow(static_cast<double>(per_replicate), 1.0 / n) - 1e-9)));
  long cells = 1;
  for (int d = 0; d < n; ++d) {
    cells *= m;
  }
  const double h = 2.0 * half / m;
  const double cell_volume = std::pow(h, n);

  // Steiner polynomial without its constant term, divided by s.
  const SteinerFitter fitter(nodes, n - 1);
  const ProxOperator prox_op(f, settings.prox);
  const CounterRng master(settings.seed, settings.stream);

  const int k_nodes = static_cast<int>(nodes.size());
  std::vector<double> reach(k_nodes);
  for (int i = 0; i < k_nodes; ++i) {
    reach[i] = support + nodes[i] * lip;
  }

  // per replicate: [coefficient j][component]
  std::vector<std::vector<std::vector<double>>> reps;
  std::vector<double> g0(width), g1(width);
  long prox_count = 0;
  for (int r = 0; r < settings.replicates; ++r) {
    CounterRng rng = master.split(static_cast<std::uint64_t>(r));
    std::vector<double> base(width, 0.0);
    std::vector<std::vector<double>> diff(k_nodes, std::vector<double>(width, 0.0));
    std::vector<int> idx(n, 0);
    Vector z(n);
    for (long c = 0; c < cells; ++c) {
      long rem = c;
      for (int d = 0; d < n; ++d) {
        idx[d] = static_cast<int>(rem % m);
        rem /= m;
      }
      for (int d = 0; d < n; ++d) {
        z(d) = -half + h * (idx[d] + rng.uniform());
      }
      const double rz = z.norm();
      if (rz >= half) {
        continue;
      }
      const bool inside = rz < support;
      if (inside) {
        weight.eval(z, g0.data());
        for (int q = 0; q < width; ++q) {
          base[q] += g0[q];
        }
      }
      for (int i = 0; i < k_nodes; ++i) {
        if (rz >= reach[i]) {
          continue;
        }
        const Vector x = prox_op(nodes[i], z);
        ++prox_count;
        if (x.norm() < support) {
          weight.eval(x, g1.data());
        } else {
          std::fill(g1.begin(), g1.end(), 0.0);
        }
        for (int q = 0; q < width; ++q) {
          diff[i][q] += g1[q] - (inside ? g0[q] : 0.0);
        }
      }
    }
    std::vector<std::vector<double>> coef(n + 1, std::vector<double>(width, 0.0));
    std::vector<double> column(k_nodes);
    for (int q = 0; q < width; ++q) {
      coef[0][q] = base[q] * cell_volume;
      for (int i = 0; i < k_nodes; ++i) {
        column[i] = diff[i][q] * cell_volume / nodes[i];
      }
      const auto c = fitter.fit(column);
      for (int j = 1; j <= n; ++j) {
        coef[j][q] = c[j - 1];
      }
    }
    reps.push_back(std::move(coef));
  }

  SteinerEstimate out;
  out.coefficients.assign(n + 1, std::vector<double>(width, 0.0));
  out.standard_errors.assign(n + 1, std::vector<double>(width, 0.0));
  const double count = settings.replicates;
  for (int j = 0; j <= n; ++j) {
    for (int q = 0; q < width; ++q) {
      double mean = 0.0;
      for (const auto& rep : reps) {
        mean += rep[j][q];
      }
      mean /= count;
      double var = 0.0;
      for (const auto& rep : reps) {
        var += (rep[j][q] - mean) * (rep[j][q] - mean);
      }
      var /= (count - 1.0);
      out.coefficients[j][q] = mean;
      out.standard_errors[j][q] = std::sqrt(var / count);
    }
  }
  out.prox_evaluations = prox_count;
  out.points = cells * settings.replicates;
  out.box_half_width = half;
  return out;
}

OracleWeight radial_weights(int n, const std::vector<RadialDensity>& densities, WeightKind kind,
                            std::optional<double> region_radius) {
  if (densities.empty()) {
    throw DomainError("oracle: no densities");
  }
  double support = 0.0;
  std::vector<double> at_zero;
  for (const auto& d : densities) {
    support = std::max(support, d.support_upper());
    double lim = std::numeric_limits<double>::quiet_NaN();
    if (kind == WeightKind::Scalar) {
      try {
        lim = d.limit_at_zero();
      } catch (const DomainError&) {
      }
    }
    at_zero.push_back(lim);
  }
  if (region_radius) {
    support = std::min(support, *region_radius);
  }
  const int per = kind == WeightKind::Scalar ? 1 : n;
  OracleWeight w;
  w.width = per * static_cast<int>(densities.size());
  w.support_radius = support;
  w.eval = [densities, at_zero, per, support, n](const Vector& x, double* out) {
    const double r = x.norm();
    for (std::size_t d = 0; d < densities.size(); ++d) {
      double v;
      if (r >= support) {
        v = 0.0;
      } else if (r == 0.0) {
        if (per == 1 && std::isnan(at_zero[d])) {
          throw DomainError("oracle: weight has no finite value at the origin");
        }
        v = per == 1 ? at_zero[d] : 0.0;
      } else {
        v = densities[d](r);
      }
      if (per == 1) {
        out[d] = v;
      } else {
        for (int i = 0; i < n; ++i) {
          out[d * n + i] = v * x(i);
        }
      }
    }
  };
  return w;
}

WeightedIntegral phi_region_oracle(const ConvexFunction& f, int j, double radius, const OracleSettings& settings) {
  const int n = f.dim();
  if (j < 0 || j > n) {
    throw DomainError("oracle: index out of range");
  }
  if (!(radius > 0.0)) {
    throw DomainError("oracle: region radius must be positive");
  }
  OracleWeight w;
  w.width = 1;
  w.support_radius = radius;
  w.eval = [radius](const Vector& x, double* out) { out[0] = x.norm() < radius ? 1.0 : 0.0; };
  const SteinerEstimate est = steiner_moments(f, w, settings);
  return WeightedIntegral::scalar_result(est.coefficients[j][0], Method::ProxSteiner, est.standard_errors[j][0]);
}

std::vector<std::vector<WeightedIntegral>> phi_weighted_oracle_all(const ConvexFunction& f,
                                                                   const std::vector<RadialDensity>& densities,
                                                                   WeightKind kind, const OracleSettings& settings,
                                                                   std::optional<double> region_radius) {
  const int n = f.dim();
  const OracleWeight w = radial_weights(n, densities, kind, region_radius);
  const SteinerEstimate est = steiner_moments(f, w, settings);
  const int per = kind == WeightKind::Scalar ? 1 : n;
  std::vector<std::vector<WeightedIntegral>> out(densities.size());
  for (std::size_t d = 0; d < densities.size(); ++d) {
    for (int j = 0; j <= n; ++j) {
      Vector v(per);
      double err2 = 0.0;
      for (int i = 0; i < per; ++i) {
        v(i) = est.coefficients[j][d * per + i];
        err2 += est.standard_errors[j][d * per + i] * est.standard_errors[j][d * per + i];
      }
      WeightedIntegral wi = per == 1 ? WeightedIntegral::scalar_result(v(0), Method::ProxSteiner, std::sqrt(err2))
                                     : WeightedIntegral::vector_result(v, Method::ProxSteiner, std::sqrt(err2));
      out[d].push_back(wi);
    }
  }
  return out;
}

WeightedIntegral phi_weighted_oracle(const ConvexFunction& f, int j, const RadialDensity& xi, WeightKind kind,
                                     const OracleSettings& settings, std::optional<double> region_radius) {
  if (j < 0 || j > f.dim()) {
    throw DomainError("oracle: index out of range");
  }
  return phi_weighted_oracle_all(f, {xi}, kind, settings, region_radius)[0][j];
}

}  // namespace kin
