#pragma once

#include <stdexcept>
#include <string>

namespace obatalab {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside the domain where the quantity is defined (e.g. N <= 1).
class ParameterDomainError : public Error {
public:
    using Error::Error;
};

/// Density vanishes where a strictly positive value is required.
class DegenerateDensityError : public Error {
public:
    using Error::Error;
};

/// Mass of a density differs from the declared normalization.
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// Density vanishes on a whole cell, so the weighted interval splits in two.
class DisconnectedSpaceError : public Error {
public:
    using Error::Error;
};

/// Sampled inputs of incompatible sizes or grids.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Ill-conditioned linear system (e.g. the sin/cos normal equations for D << pi).
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Operation called with arguments violating its stated preconditions.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Input claimed to be CD(N-1,N) produced a quantity only a non-CD input can produce.
class NonCdInputError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV or JSON input.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace obatalab
