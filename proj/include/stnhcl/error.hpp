#pragma once

#include <stdexcept>
#include <string>

namespace stnhcl {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor extents do not agree with what an operation requires.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A configuration value (hyperparameter, layer id, label, K, ...) is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// A caller broke a documented precondition (non-scalar loss, negative weights, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed checkpoint, image or manifest contents.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace stnhcl
