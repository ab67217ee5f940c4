#pragma once

#include <stdexcept>
#include <string>

namespace advattrib {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EmptyDocumentError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class MaskError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

class SelectionError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class BankError : public Error {
public:
    BankError(std::size_t maskIndex, const std::string& what)
        : Error("mask " + std::to_string(maskIndex) + ": " + what), maskIndex_(maskIndex) {}

    std::size_t mask_index() const noexcept { return maskIndex_; }

private:
    std::size_t maskIndex_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace advattrib
