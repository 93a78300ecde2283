#pragma once

#include <stdexcept>

namespace cat {

// Raised for file errors; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cat
