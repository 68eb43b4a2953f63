#pragma once

#include <stdexcept>
#include <string>

namespace asyncloc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
  using Error::Error;
};

class InvalidSequence : public Error {
public:
  using Error::Error;
};

/// Two nodes referenced by the observation model are (numerically) coincident.
class DegenerateGeometry : public Error {
public:
  using Error::Error;
};

class MissingTruth : public Error {
public:
  using Error::Error;
};

/// The normal matrix of the fixed-point update could not be factorized.
class SingularNormalMatrix : public Error {
public:
  using Error::Error;
};

class NonFiniteIterate : public Error {
public:
  using Error::Error;
};

/// The hybrid information matrix is not positive definite.
class SingularInformation : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace asyncloc
