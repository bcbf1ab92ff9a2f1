#pragma once

#include <stdexcept>
#include <string>

namespace pathsense {

// Base for every error raised by the library. Subclasses only tag the category;
// the message always carries the detail (field name, cell index, line number).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid construction parameters. The message starts with the offending field.
class ParameterError : public Error {
public:
    ParameterError(const std::string& field, const std::string& what)
        : Error(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Malformed input file or stream.
class ParseError : public Error {
public:
    using Error::Error;
};

// Mismatched dimensions between grids.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Lifecycle violation (double start, tick on a finished session, ...).
class StateError : public Error {
public:
    using Error::Error;
};

// Input rejected by a validation rule (non-unit quaternion, id mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A metric cannot be computed for the given data.
class MetricUndefined : public Error {
public:
    using Error::Error;
};

// Run configuration not allowed in the requested mode.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace pathsense
