// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

// Each precision build of the library lives in its own inline namespace so
// that both can be linked into one program.
#ifdef SCARF_USE_DOUBLE
#define SCARF_PRECISION_NS f64
#else
#define SCARF_PRECISION_NS f32
#endif

namespace scarf {

/// Raised when tensor dimensions are incompatible with an operation.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid arguments that are not shape related (bad label, empty list, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for inconsistent or illegal configurations.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when internal state disagrees with what an operation requires
/// (e.g. a parameter without a gradient).
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Misuse of the gradient tape.
class AutodiffError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace scarf
