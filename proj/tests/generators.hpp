#pragma once

// Hand-rolled generators for the property tests; every draw comes from a
// fixed CounterRng stream so failures reproduce.

#include "kin/numerics.hpp"

namespace kin::testing {

inline double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline Vector random_point(CounterRng& rng, int n, double radius) {
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    x(i) = uniform(rng, -radius, radius);
  }
  return x;
}

inline SymMatrix random_sym(CounterRng& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.normal();
    }
  }
  return SymMatrix(0.5 * (m + m.transpose()));
}

inline SymMatrix random_spd(CounterRng& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.normal();
    }
  }
  return SymMatrix(m * m.transpose() + 0.5 * Matrix::Identity(n, n));
}

}  // namespace kin::testing
