#pragma once

#include <stdexcept>
#include <string>

namespace pinfield {

// Bad inputs throw std::invalid_argument; these two cover failures that
// happen while computing.

/// A solver failed to converge or produced an inconsistent result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A window, box or budget is too small or too large for the request.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pinfield
