#pragma once

#include <stdexcept>
#include <string>

namespace htsolve {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad dimensions, negative tolerances, malformed files.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Operands live on different trees or mode dimensions.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A dense materialization would exceed the configured entry limit.
class SizeGuardExceeded : public Error {
public:
    using Error::Error;
};

/// A requested accuracy cannot be certified within the resource limits.
class ToleranceInfeasible : public Error {
public:
    using Error::Error;
};

/// An iteration failed to contract as its configuration promised.
class ContractionViolation : public Error {
public:
    using Error::Error;
};

/// A tensor left the index set on which a scaling was certified.
class CertificateViolation : public Error {
public:
    using Error::Error;
};

} // namespace htsolve
