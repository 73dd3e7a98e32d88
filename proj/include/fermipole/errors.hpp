#pragma once

#include <stdexcept>

namespace fermipole {

/// Convergence or conditioning failure inside a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fermipole
