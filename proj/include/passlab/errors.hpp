#pragma once

#include <stdexcept>
#include <string>

namespace passlab {

/// Input data violates a documented schema or invariant. The CLI maps this
/// to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace passlab
