#pragma once

#include <stdexcept>

namespace evtcrypt {

// Malformed or out-of-contract input data. The CLI maps this to exit code 2.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Key integrity or wrong-secret failures. The CLI maps this to exit code 3.
struct key_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace evtcrypt
