#pragma once

#include <stdexcept>
#include <string>

namespace dicke {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stereographic chart overflow near the south pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// Canonical chart breakdown (I -> 0 or |cos theta| -> 1).
class SingularityError : public Error {
 public:
  using Error::Error;
};

class ToleranceError : public Error {
 public:
  using Error::Error;
};

/// Minimum step underflow. The integrator that throws it keeps its partial
/// result available to the caller (see Trajectory::status).
class StepFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateTangentError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class EmptyShellError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class GridError : public Error {
 public:
  using Error::Error;
};

}  // namespace dicke
