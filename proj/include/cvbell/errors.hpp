#pragma once

#include <stdexcept>
#include <string>

namespace cvbell {

/// Bad argument or configuration (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The normalizing sum of the four correlators vanishes, so P and E are undefined.
class DegenerateSource : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A sampled normalizing sum came out non-positive.
class DegenerateEstimate : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An estimator cell has fewer than two windows.
class InsufficientData : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) {
        throw InvalidArgument(what);
    }
}

}  // namespace detail
}  // namespace cvbell
