#pragma once

#include <stdexcept>
#include <string>

namespace voxpan {

// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when grids, masks or matrices disagree in shape.
class ShapeMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Raised by the file readers on malformed or unreadable input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace voxpan
