#pragma once

#include <stdexcept>
#include <string>

namespace polarlab {

/// Invalid input: malformed kernels, out-of-range arguments, bad files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exact computation would exceed the configured table cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace polarlab
