#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace handtrack {

/// Raised when a caller violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by the binary/text readers. Carries the byte offset (or line number
/// for text formats) where parsing stopped.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& message, std::uint64_t offset)
        : std::runtime_error(message + " (at offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

} // namespace handtrack
