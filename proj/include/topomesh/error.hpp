#pragma once

#include <stdexcept>
#include <string>

namespace topomesh {

// Structural / numerical failure while running (exit code 2 at the CLI).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input, config, or file format (exit code 1 at the CLI).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace topomesh
