#pragma once

#include <stdexcept>
#include <string>

namespace wdstop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (negative time, nonpositive rate, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A requested moment of the weighting distribution is infinite.
class DivergentMoment : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not reach its accuracy target.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double attained)
        : Error(what), attained_(attained) {}
    double attained() const noexcept { return attained_; }

private:
    double attained_;
};

/// A bracketing root search found no sign change.
class NoRootError : public Error {
public:
    using Error::Error;
};

/// A mandatory admissibility check failed; solvers refuse to run.
class AdmissibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace wdstop
