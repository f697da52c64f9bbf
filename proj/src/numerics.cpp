#include "kin/numerics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <string>

namespace kin {

double kappa(int m) {
  if (m < 0) {
    throw DomainError("kappa: negative dimension " + std::to_string(m));
  }
  return std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

double omega(int n) {
  if (n < 1) {
    throw DomainError("omega: dimension must be positive");
  }
  return n * kappa(n);
}

double binom(int n, int k) {
  if (k < 0 || n < 0 || k > n) {
    return 0.0;
  }
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return std::round(r);
}

Vector unit_vector(int n, int axis) {
  Vector e = Vector::Zero(n);
  e(axis) = 1.0;
  return e;
}

namespace {

void check_dim(int n, const char* what) {
  if (n < 1 || n > kMaxDim) {
    throw DomainError(std::string(what) + ": dimension must be in 1..4, got " + std::to_string(n));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DomainError("SymMatrix: matrix is not square");
  }
  check_dim(static_cast<int>(m.rows()), "SymMatrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12 * scale)) {
    throw DomainError("SymMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) {
  check_dim(n, "SymMatrix::identity");
  return SymMatrix(Matrix::Identity(n, n), Unchecked{});
}

SymMatrix SymMatrix::zero(int n) {
  check_dim(n, "SymMatrix::zero");
  return SymMatrix(Matrix::Zero(n, n), Unchecked{});
}

SymMatrix SymMatrix::diagonal(std::span<const double> entries) {
  const int n = static_cast<int>(entries.size());
  check_dim(n, "SymMatrix::diagonal");
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = entries[i];
  }
  return SymMatrix(m, Unchecked{});
}

std::vector<double> SymMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m_, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  if (other.dim() != dim()) {
    throw DomainError("SymMatrix: dimension mismatch in sum");
  }
  return SymMatrix(m_ + other.m_, Unchecked{});
}

SymMatrix SymMatrix::operator*(double c) const { return SymMatrix(m_ * c, Unchecked{}); }

// ---------------------------------------------------------------------------
// Rotation

Rotation::Rotation(const Matrix& m) : m_(m) {
  if (m.rows() != m.cols()) {
    throw DomainError("Rotation: matrix is not square");
  }
  const int n = static_cast<int>(m.rows());
  check_dim(n, "Rotation");
  const double orth = (m * m.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(orth <= 1e-10)) {
    throw DomainError("Rotation: matrix is not orthogonal (deviation " + std::to_string(orth) + ")");
  }
  if (!(std::abs(m.determinant() - 1.0) <= 1e-10)) {
    throw DomainError("Rotation: determinant is not +1");
  }
}

Rotation Rotation::identity(int n) { return Rotation(Matrix::Identity(n, n)); }

Rotation Rotation::inverse() const { return Rotation(Matrix(m_.transpose())); }

Rotation Rotation::operator*(const Rotation& other) const {
  if (other.dim() != dim()) {
    throw DomainError("Rotation: dimension mismatch in product");
  }
  return Rotation(Matrix(m_ * other.m_));
}

// ---------------------------------------------------------------------------
// Elementary symmetric functions and mixed discriminants

double elem_sym(std::span<const double> eigenvalues, int j) {
  const int n = static_cast<int>(eigenvalues.size());
  if (j < 0 || j > n) {
    throw DomainError("elem_sym: index " + std::to_string(j) + " outside 0.." + std::to_string(n));
  }
  // e[k] after processing a prefix holds the k-th elementary symmetric
  // function of that prefix.
  std::array<double, kMaxDim + 2> e{};
  std::vector<double> big;
  double* acc = e.data();
  if (n + 1 > static_cast<int>(e.size())) {
    big.assign(n + 1, 0.0);
    acc = big.data();
  }
  acc[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k >= 1; --k) {
      acc[k] += eigenvalues[i] * acc[k - 1];
    }
  }
  return acc[j];
}

double elem_sym(const SymMatrix& a, int j) {
  const int n = a.dim();
  if (j < 0 || j > n) {
    throw DomainError("elem_sym: index " + std::to_string(j) + " outside 0.." + std::to_string(n));
  }
  if (j == 0) {
    return 1.0;
  }
  if (j == n) {
    return a.matrix().determinant();
  }
  const Matrix& m = a.matrix();
  double sum = 0.0;
  // Enumerate j-subsets of {0..n-1} as bitmasks.
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != j) {
      continue;
    }
    std::array<int, kMaxDim> idx{};
    int k = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        idx[k++] = i;
      }
    }
    Matrix minor(j, j);
    for (int r = 0; r < j; ++r) {
      for (int c = 0; c < j; ++c) {
        minor(r, c) = m(idx[r], idx[c]);
      }
    }
    sum += minor.determinant();
  }
  return sum;
}

namespace {

struct BernsteinSystem {
  std::array<double, kMaxDim + 1> tau{};
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxDim + 1> inverse;
};

// Collocation of the Bernstein-type basis C(n,j) tau^j (1-tau)^(n-j) at
// Chebyshev nodes of (0, 1).
const BernsteinSystem& bernstein_system(int n) {
  static const std::array<BernsteinSystem, kMaxDim + 1> systems = [] {
    std::array<BernsteinSystem, kMaxDim + 1> out{};
    for (int dim = 1; dim <= kMaxDim; ++dim) {
      BernsteinSystem& sys = out[dim];
      Eigen::MatrixXd m(dim + 1, dim + 1);
      for (int i = 0; i <= dim; ++i) {
        const double tau = 0.5 * (1.0 - std::cos((2.0 * i + 1.0) * kPi / (2.0 * (dim + 1))));
        sys.tau[i] = tau;
        for (int j = 0; j <= dim; ++j) {
          m(i, j) = binom(dim, j) * std::pow(tau, j) * std::pow(1.0 - tau, dim - j);
        }
      }
      sys.inverse = m.inverse();
    }
    return out;
  }();
  return systems[n];
}

}  // namespace

double mixed_det_two(const SymMatrix& a, const SymMatrix& b, int j) {
  const int n = a.dim();
  if (b.dim() != n) {
    throw DomainError("mixed_det_two: dimension mismatch");
  }
  if (j < 0 || j > n) {
    throw DomainError("mixed_det_two: index " + std::to_string(j) + " outside 0.." + std::to_string(n));
  }
  const BernsteinSystem& sys = bernstein_system(n);
  double out = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double tau = sys.tau[i];
    const Matrix m = tau * a.matrix() + (1.0 - tau) * b.matrix();
    out += sys.inverse(j, i) * m.determinant();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random streams

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed + kGolden) ^ (stream * 0xD1B54A32D192ED03ULL + 1))) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::normal() { return normal_(*this); }

CounterRng CounterRng::split(std::uint64_t index) const { return CounterRng(key_, index); }

Rotation haar_rotation(int n, CounterRng& rng) {
  check_dim(n, "haar_rotation");
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = rng.normal();
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) *= -1.0;
    }
  }
  if (q.determinant() < 0.0) {
    q.col(0) *= -1.0;
  }
  return Rotation(q);
}

// ---------------------------------------------------------------------------
// Steiner fits

namespace {

Eigen::MatrixXd vandermonde(std::span<const double> nodes, int degree) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(nodes.size()), degree + 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      v(static_cast<Eigen::Index>(i), k) = p;
      p *= nodes[i];
    }
  }
  return v;
}

void check_nodes(std::span<const double> nodes, int degree) {
  if (degree < 0) {
    throw DomainError("steiner_fit: negative degree");
  }
  std::set<double> distinct;
  for (double s : nodes) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DomainError("steiner_fit: nodes must be finite and positive");
    }
    distinct.insert(s);
  }
  if (static_cast<int>(distinct.size()) < degree + 1) {
    throw DomainError("steiner_fit: need at least " + std::to_string(degree + 1) +
                      " distinct nodes, got " + std::to_string(distinct.size()));
  }
}

}  // namespace

std::vector<double> steiner_fit(std::span<const std::pair<double, double>> samples, int degree) {
  std::vector<double> nodes;
  std::vector<double> values;
  for (const auto& [s, v] : samples) {
    nodes.push_back(s);
    values.push_back(v);
  }
  return SteinerFitter(nodes, degree).fit(values);
}

SteinerFitter::SteinerFitter(std::span<const double> nodes, int degree)
    : nodes_(nodes.begin(), nodes.end()), degree_(degree) {
  check_nodes(nodes, degree);
  const Eigen::MatrixXd v = vandermonde(nodes, degree);
  pseudo_inverse_ = v.colPivHouseholderQr().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(nodes.size())));
}

std::vector<double> SteinerFitter::fit(std::span<const double> values) const {
  if (values.size() != nodes_.size()) {
    throw DomainError("SteinerFitter::fit: value count does not match node count");
  }
  const Eigen::Map<const Eigen::VectorXd> y(values.data(), static_cast<Eigen::Index>(values.size()));
  const Eigen::VectorXd c = pseudo_inverse_ * y;
  return {c.data(), c.data() + c.size()};
}

std::vector<double> SteinerFitter::coefficient_functional(int index) const {
  if (index < 0 || index > degree_) {
    throw DomainError("SteinerFitter: coefficient index out of range");
  }
  const Eigen::VectorXd row = pseudo_inverse_.row(index);
  return {row.data(), row.data() + row.size()};
}

// ---------------------------------------------------------------------------
// Gauss-Legendre

namespace {

GaussRule compute_gauss_legendre(int order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  // Legendre P_order and P_order-1 at x.
  auto legendre = [order](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, p0};
  };
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, pm1] = legendre(x);
      dp = order * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const auto [p, pm1] = legendre(x);
    dp = order * (x * p - pm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) {
    rule.nodes[order / 2] = 0.0;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > 1024) {
    throw DomainError("gauss_legendre: order must be in 1..1024");
  }
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, order == 1 ? GaussRule{{0.0}, {2.0}} : compute_gauss_legendre(order)).first;
  }
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, int order) {
  if (!(b > a)) {
    return 0.0;
  }
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) {
      cuts.push_back(p);
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const GaussRule& rule = gauss_legendre(order);
  auto panel = [&](double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return sum * half;
  };

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    if (lo <= 0.0) {
      // Dyadic panels accumulating at 0.
      double right = hi;
      for (int level = 0; level < 48; ++level) {
        const double left = 0.5 * right;
        total += panel(left, right);
        right = left;
      }
      total += panel(0.0, right);
    } else if (hi / lo > 2.0) {
      double left = lo;
      while (left < hi) {
        const double right = std::min(hi, 2.0 * left);
        total += panel(left, right);
        left = right;
      }
    } else {
      total += panel(lo, hi);
    }
  }
  return total;
}

}  // namespace kin
