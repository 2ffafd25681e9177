#pragma once

#include <stdexcept>
#include <string>

namespace duprg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, written or renamed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A value violates a documented invariant (bad flags, bad bank, label out of range, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Shapes of two operands disagree.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite values or undefined cosines encountered during computation.
class NumericError : public Error {
public:
    using Error::Error;
};

enum class FormatErrc {
    bad_magic,
    unsupported_version,
    wrong_kind,
    truncated,
    trailing_data,
    bad_metadata,
    zero_norm,
    non_finite,
    bad_label,
    bad_dims,
};

const char* to_string(FormatErrc code) noexcept;

/// Malformed DUPR / DUPC file. `code()` tells which header field or payload check failed.
class FormatError : public ValidationError {
public:
    FormatError(FormatErrc code, const std::string& what)
        : ValidationError(std::string(to_string(code)) + ": " + what), code_(code) {}

    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

} // namespace duprg
