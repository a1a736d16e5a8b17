#pragma once

#include <stdexcept>
#include <string>

namespace pndkit {

/// Argument outside the domain of an operation (bad grid, bad range, shape mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A characteristic whose defining ratio has a vanishing denominator.
class UndefinedCharacteristic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Counts observed on an outcome the model gives zero probability.
class InfeasibleData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Count data that do not fit the measurement model (unknown setting, wrong outcome count).
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw InvalidInput(what);
}

}  // namespace pndkit
