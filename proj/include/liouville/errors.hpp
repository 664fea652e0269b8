#pragma once

#include <stdexcept>
#include <string>

namespace liouville {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NonSquareError : public Error {
public:
    using Error::Error;
};

/// Input matrix violates the symmetry tolerance; message names the worst pair.
class AsymmetricBeyondToleranceError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// (H1)/(H2) prerequisites of an operation do not hold.
class HypothesesNotSatisfiedError : public Error {
public:
    using Error::Error;
};

class EmptySubsetError : public Error {
public:
    using Error::Error;
};

class NonpositiveRhoError : public Error {
public:
    using Error::Error;
};

class ZeroMassError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class StepUnderflowError : public Error {
public:
    using Error::Error;
};

/// Initial height exceeds the clamped exponent range; message reports the cap.
class OverflowInExponentialError : public Error {
public:
    using Error::Error;
};

class NoConvergenceError : public Error {
public:
    using Error::Error;
};

class NonzeroMeanError : public Error {
public:
    using Error::Error;
};

} // namespace liouville
