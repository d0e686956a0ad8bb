#pragma once

#include <stdexcept>
#include <string>

namespace zerostat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidIndexError : public Error {
 public:
  using Error::Error;
};

class EmptyBasisError : public Error {
 public:
  using Error::Error;
};

class PolytopeError : public Error {
 public:
  using Error::Error;
};

/// A root finder could not certify every zero it was asked for.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// A polynomial system is not generic (shared component, vanishing resultant).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class KernelUnderflowError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace zerostat
