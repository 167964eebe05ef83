#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sphand {

// Text-format parse failure. line is 1-based; 0 means "whole stream"
// (e.g. empty input).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Binary container failure, one variant per way a stream can be wrong.
enum class ContainerErrorKind {
    bad_magic,
    unsupported_version,
    unsupported_dtype,
    invalid_dims,
    truncated_header,
    truncated_payload,
};

class ContainerError : public std::runtime_error {
public:
    ContainerError(ContainerErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ContainerErrorKind kind() const noexcept { return kind_; }

private:
    ContainerErrorKind kind_;
};

// Bad key/value in a config file or an out-of-range user-supplied id.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor/model dimension mismatch.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training aborted (empty dataset, non-finite loss).
class TrainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sphand
