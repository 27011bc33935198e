#pragma once

#include <stdexcept>
#include <string>

namespace wlrma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-range user input (weights outside [0,1], bad config, parse failures).
class InputError : public Error {
public:
    using Error::Error;
};

/// A dense kernel (SVD, factorization) failed to produce a usable result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A k x k normal-equation system was singular; `factor()` names the offending factor ("A" or "B").
class DegenerateFactorError : public NumericalError {
public:
    explicit DegenerateFactorError(std::string factor)
        : NumericalError("rank-deficient factor " + factor +
                         ": Gram matrix is not positive definite"),
          factor_(std::move(factor)) {}

    const std::string &factor() const noexcept { return factor_; }

private:
    std::string factor_;
};

} // namespace wlrma
