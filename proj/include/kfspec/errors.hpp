#pragma once

#include <stdexcept>
#include <string>

namespace kfspec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant (bad weights, maps, sizes...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must agree in length or node set do not.
class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Requested discretization exceeds the configured atom cap.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

/// Measure is valid but outside what an operation supports
/// (overlapping IFS images, total mass != 1 where required, ...).
class UnsupportedSpec : public Error {
 public:
  using Error::Error;
};

/// Neumann kernel requested for a measure with total mass != 1.
class NormalizationError : public UnsupportedSpec {
 public:
  using UnsupportedSpec::UnsupportedSpec;
};

/// Boundary condition not supported by the operation.
class UnsupportedBoundary : public Error {
 public:
  using Error::Error;
};

/// Divided difference over a bracket with zero mu-mass.
class NullBracket : public Error {
 public:
  NullBracket(double x, double y)
      : Error("mu-null bracket [" + std::to_string(x) + ", " + std::to_string(y) + "]"),
        lo(x),
        hi(y) {}
  double lo;
  double hi;
};

/// Eigensolver or other iterative routine failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A value that must hold by construction does not (negative CDF increment...).
class InternalConsistency : public Error {
 public:
  using Error::Error;
};

}  // namespace kfspec
