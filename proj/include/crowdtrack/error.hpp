#pragma once

#include <stdexcept>
#include <string>

namespace crowdtrack {

/// Raised for invalid inputs: malformed files, out-of-range parameters,
/// dimension mismatches. The CLI maps it to the data-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdtrack
