#pragma once

#include <stdexcept>
#include <string>

namespace bis {

// Input/environment failures (missing files, unreadable streams). CLI exit 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad data or bad configuration (schema violations, domain errors). CLI exit 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bis
