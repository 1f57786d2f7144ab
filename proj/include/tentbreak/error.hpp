#pragma once

#include <stdexcept>
#include <string>

namespace tentbreak {

/// Parameter outside the domain an operation is defined on (alpha = 0, t = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed key, ciphertext, table or state file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A message does not fit the session it is used with.
class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Observations that a fixed-clock oracle cannot produce, e.g. a multi-bit
/// ciphertext difference for a single-bit plaintext difference.
class OracleModelViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Equations with no solution (wrong permutation or mismatched pairs).
class InconsistentInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tentbreak
