#pragma once

#include <stdexcept>
#include <string>

namespace varfrac {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition or validation failure on user-supplied data.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Argument lies at a pole or outside the mathematical domain.
class DomainError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Numerical machinery gave up: budgets, non-convergence, overflow.
class NumericalError : public Error {
public:
    using Error::Error;
};

class QuadratureBudgetExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonFiniteValue : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace varfrac
