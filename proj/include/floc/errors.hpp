#pragma once

#include <stdexcept>
#include <string>

namespace floc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or expression text.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input that violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace floc
