#pragma once

#include <stdexcept>
#include <string>

namespace sharpen {

// Base of every error the library raises. The CLI maps each family to an exit
// code: input/state/model-spec -> 1, capacity -> 2, numerical -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

// A DecodeState that cannot belong to the model it was handed to.
class StateError : public InputError {
public:
    using InputError::InputError;
};

// A model specification that is malformed or leaks probability mass.
class ModelSpecError : public InputError {
public:
    using InputError::InputError;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// The proposal assigned zero mass to a token it produced.
class SupportError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace sharpen
