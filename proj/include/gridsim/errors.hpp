#pragma once

#include <stdexcept>
#include <string>

namespace gridsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid case/scenario input. CLI exit code 3.
class CaseError : public Error {
public:
    using Error::Error;
};

/// Newton or network iteration failed to converge, or a matrix was singular.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A simulated speed left the accepted band.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// A topology change split the network or left a part without a voltage source.
class IslandingError : public Error {
public:
    using Error::Error;
};

/// An event referenced a missing or already-removed element.
class EventError : public Error {
public:
    using Error::Error;
};

}  // namespace gridsim
