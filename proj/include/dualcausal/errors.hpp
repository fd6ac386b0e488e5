#pragma once

#include <stdexcept>
#include <string>

namespace dcl {

// All library failures derive from Error so callers can catch one type at the
// CLI boundary while tests discriminate on the concrete class.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Non-finite values escaping an exported numeric operation.
class NumericError : public Error {
public:
    using Error::Error;
};

// World specification violated one of its declared invariants.
class SpecValidationError : public Error {
public:
    using Error::Error;
};

// Episode generation cannot proceed (cyclic order rules, too many tokens).
class GenerationError : public Error {
public:
    using Error::Error;
};

// Adjustment formula requested on a graph where its identification
// conditions fail; the formula is not asserted equal to surgery truth.
class CriterionError : public Error {
public:
    using Error::Error;
};

class UndefinedConditionalError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Config-level problems: unknown key, wrong type, bad value.
class ValidationError : public Error {
public:
    using Error::Error;
};

class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

} // namespace dcl
