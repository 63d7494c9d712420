#ifndef QFOCK_ERRORS_HPP
#define QFOCK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qfock {

// Caller violated a precondition (bad arguments, mode mismatch, malformed input).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A size or budget cap was exceeded before or during the computation.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Creation on a word already at the truncation depth.
class DepthExceeded : public ResourceError {
 public:
  using ResourceError::ResourceError;
};

// Degenerate algebraic data: singular Hankel systems, products past the cutoff.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CutoffExceeded : public DegeneracyError {
 public:
  explicit CutoffExceeded(const std::string& what)
      : DegeneracyError("degree cutoff exceeded: " + what) {}
};

}  // namespace qfock

#endif  // QFOCK_ERRORS_HPP
