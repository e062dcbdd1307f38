#pragma once

#include <stdexcept>
#include <string>

namespace channel_eq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inadmissible geometry or obstacle placement (CLI exit code 3).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// |h| >= L - 1: the obstacle touches a channel wall.
class CollisionError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// |theta| >= pi/2.
class RangeError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class MeshFailure : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class MissingTag : public Error {
 public:
  using Error::Error;
};

class DofMismatch : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// Nonlinear iteration failed. Carries the last residual and the Reynolds
// number reached by continuation so callers can report the envelope.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double last_residual, double reached_R)
      : Error(what), last_residual_(last_residual), reached_R_(reached_R) {}

  double last_residual() const { return last_residual_; }
  double reached_R() const { return reached_R_; }

 private:
  double last_residual_;
  double reached_R_;
};

}  // namespace channel_eq
