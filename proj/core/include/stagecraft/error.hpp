#pragma once

#include <stdexcept>
#include <string>

namespace stagecraft {

// Thrown for data/model errors: invalid inputs, malformed files,
// mismatched structures. API misuse throws std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stagecraft
