#ifndef SLOPECP_ERROR_HPP
#define SLOPECP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace slopecp {

/// Bad input: malformed files, invalid configurations, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside a computation, e.g. a precision matrix that is
/// not positive definite because the design is collinear.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace slopecp

#endif
