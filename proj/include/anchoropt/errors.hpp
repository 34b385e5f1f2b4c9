#pragma once

#include <stdexcept>
#include <string>

namespace anchoropt {

/// Invalid user-supplied configuration (unknown names, bad ranges, bad files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a precondition of an operation (dimension mismatch, k > n, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Out-of-order use of a stateful interface, e.g. ask() twice without tell().
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Failure while numerically fitting a model.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anchoropt
