#pragma once

#include <stdexcept>
#include <string>

namespace semshare {

// Invalid or inconsistent configuration, detected before any simulation runs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// API misuse such as stepping a finished episode or mismatched shapes.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN or infinity reached a loss, gradient or parameter.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semshare
