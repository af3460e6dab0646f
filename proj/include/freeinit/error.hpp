// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace freeinit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

/// Malformed tensor file; the message names the offending field.
class FormatError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf encountered during training or sampling.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A required artifact (weights, tensor file) is absent.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace freeinit
