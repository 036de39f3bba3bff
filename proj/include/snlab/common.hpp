#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace snlab {

using cplx = std::complex<double>;

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: wrong tensor shapes, missing blocks, bad locators.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Input is well-formed but violates a mathematical requirement.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A documented precondition of an algorithm does not hold numerically.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Basis or region size beyond the configured cap.
class CapExceededError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// An iterative method failed to reach its target.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

inline constexpr double kEigenClip = 1e-12;
inline constexpr double kDegeneracyTol = 1e-8;

} // namespace snlab
