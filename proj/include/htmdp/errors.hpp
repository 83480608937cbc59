#pragma once

#include <stdexcept>
#include <string>

namespace htmdp {

// Shapes of inputs disagree (kernel vs layout, table sizes, layer support).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value lies outside the domain of a closed-form expression.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Brute-force enumeration would exceed its declared budget.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Experiment or regime configuration rejected at construction.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss family without an analytic moment certificate.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace htmdp
