#pragma once

#include <stdexcept>
#include <string>

namespace kin {

// Root of every error raised by the library. Callers that only need to
// report failures catch this; callers that branch on the failure catch the
// concrete type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (index out of range, dimension
// mismatch, non-positive parameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NotDifferentiable : public Error {
 public:
  using Error::Error;
};

class NotTwiceDifferentiable : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class UnsupportedVariant : public Error {
 public:
  using Error::Error;
};

// A density failed the numerical limit certification for a requested class.
class ClassViolation : public Error {
 public:
  using Error::Error;
};

// Two independent computational routes disagree beyond tolerance.
class RouteMismatch : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kin
