#pragma once

#include <stdexcept>
#include <string>

namespace noma {

// Bad command line / bad config key. Maps to process exit code 1.
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed input data. Maps to process exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Internal numeric failure (non-finite loss, singular system, ...).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace noma
