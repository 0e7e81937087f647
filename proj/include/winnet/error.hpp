#pragma once

#include <stdexcept>
#include <string>

namespace winnet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation expects.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or structural setting is outside its domain.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data is unusable (non-finite values, wrong layout).
class InputError : public Error {
public:
    using Error::Error;
};

/// API misuse, e.g. calling backward on a non-scalar.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Carries the 1-based row and column when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t col = 0)
        : Error(what), row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace winnet
