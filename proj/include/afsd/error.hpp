#pragma once

#include <stdexcept>
#include <string>

namespace afsd {

/// Base for all errors raised by the toolchain.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input, configuration, or usage. CLI exit status 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failure while running a computation (solver divergence, I/O). CLI exit status 2.
class RuntimeFailure : public Error {
public:
    using Error::Error;
};

}  // namespace afsd
