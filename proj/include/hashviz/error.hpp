#pragma once

#include <stdexcept>
#include <string>

namespace hashviz {

// Fatal data or environment error (unreadable input, corrupt file, empty
// vocabulary, ...). Precondition violations use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hashviz
