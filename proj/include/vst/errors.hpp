#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vst {

// Shape or broadcast mismatch between tensors.
struct DimError : std::runtime_error {
  explicit DimError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (bad rate, inconsistent dims, empty corpus, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated data contract: missing START, wrong image count, unresolved id,
// unmatched story_id, all-zero loss mask.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Token or row index out of range.
struct IndexError : std::runtime_error {
  explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value where the contract requires finite math.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed binary or text file; carries the byte offset of the failure.
struct FormatError : std::runtime_error {
  FormatError(const std::string& msg, std::size_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

}  // namespace vst
