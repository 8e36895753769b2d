#pragma once

#include <stdexcept>
#include <string>

namespace gmvae {

/// Violated precondition: bad shape, out-of-range argument, asymmetric input.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method ran out of sweeps/iterations.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN/Inf showed up in a loss term or gradient.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrorKind { BadMagic, VersionMismatch, Truncated, Malformed };

/// Parse failure for the binary GMVF/GMVM containers.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw ContractError(what);
}
inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

}  // namespace gmvae
