#pragma once

#include <stdexcept>
#include <string>

namespace fire {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad JSONL line, missing score, duplicate id, bad config.
class InputError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments was violated (sizes, ranges, counts).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Numerically degenerate situation: constant columns, all-zero
/// orthogonality, fully correlated raters.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// The judge could not produce a verdict (endpoint down, retries exhausted).
class JudgeError : public Error {
public:
    using Error::Error;
};

} // namespace fire
