#pragma once

#include <stdexcept>
#include <string>

namespace resteer {

// File/format problems: bad magic, truncation, corrupted payload.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Config/spec-file problems with field diagnostics.
struct schema_error : std::runtime_error {
  explicit schema_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Patch applied to a base it was not made from.
struct fingerprint_error : std::runtime_error {
  explicit fingerprint_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace resteer
