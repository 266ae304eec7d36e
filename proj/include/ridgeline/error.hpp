#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ridgeline {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument (shape, sign, finiteness) was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

    /// Same error with "<context>: " in front of the message, line kept.
    ParseError with_context(const std::string& context) const {
        return ParseError(context + ": " + what(), line_, Tag{});
    }

private:
    struct Tag {};
    ParseError(const std::string& what, std::size_t line, Tag) : Error(what), line_(line) {}

    std::size_t line_;
};

/// A linear system could not be solved because a coordinate carries no information.
class SingularSystem : public Error {
public:
    SingularSystem(const std::string& what, std::ptrdiff_t coordinate)
        : Error(what), coordinate_(coordinate) {}

    /// Index of the offending coordinate, -1 when unknown.
    std::ptrdiff_t coordinate() const noexcept { return coordinate_; }

private:
    std::ptrdiff_t coordinate_;
};

}  // namespace ridgeline
