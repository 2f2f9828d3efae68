#pragma once

#include <stdexcept>
#include <string>

namespace fldcrf {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model description violates a structural rule (empty alphabet, bad link, ...).
class InvalidSpec : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A label value lies outside its category's alphabet.
class InvalidLabel : public Error {
public:
    using Error::Error;
};

/// Objective or gradient became NaN/inf during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Exhaustive enumeration would exceed its path budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Malformed input text (CSV cell, config value, model document).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Column layout or configuration does not match what a command needs.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Prediction and ground-truth rows do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Unsupported or missing format version in a serialized document.
class VersionMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace fldcrf
