#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfd {

/// Base class of every error the library reports for bad input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text, with the offending position (byte offset or line number).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A well-formed input that violates a semantic constraint (arity, team membership, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A configured size cap was exceeded.
class SizeLimitError : public Error {
public:
    using Error::Error;
};

} // namespace lfd
