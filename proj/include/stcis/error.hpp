#pragma once

#include <stdexcept>
#include <string>

namespace stcis {

// Raised when a caller breaks an operation's precondition (bad index,
// shape mismatch, empty batch, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The scene generator could not satisfy a protocol filter within its
// attempt budget.
class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, truncated or incompatible file.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace stcis
