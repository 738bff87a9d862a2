#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcnn {

/// Precondition violation: bad shape, out-of-range index, invalid option.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated file. Carries the byte offset where decoding failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed file with unusable content (NaN values, label out of range).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative method hit its cap without meeting its tolerance.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::size_t iterations)
        : std::runtime_error(what + " after " + std::to_string(iterations) + " iterations"),
          iterations_(iterations) {}

    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

}  // namespace detail

}  // namespace mcnn
