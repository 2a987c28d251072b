#pragma once

#include <stdexcept>
#include <string>

namespace fdx {

// Bad inputs: malformed files, off-grid timestamps, broken invariants.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or corrupt data mid-run. CLI exit code 1.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fdx
