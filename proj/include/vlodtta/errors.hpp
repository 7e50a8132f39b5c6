#pragma once

#include <stdexcept>
#include <string>

namespace vlodtta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A row whose L2 norm is at or below the normalization guard.
class NearZeroRow : public Error {
 public:
  using Error::Error;
};

// Cluster weights that sum to zero or less.
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

class InvalidBox : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vlodtta
