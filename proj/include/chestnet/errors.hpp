#pragma once

#include <stdexcept>
#include <string>

namespace chestnet {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation precondition (non-scalar backward, bad index, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset ingestion or generation failure.
class DataError : public Error {
public:
    using Error::Error;
};

/// Checkpoint file is malformed or incompatible.
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Training diverged (non-finite loss) or otherwise could not continue.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// ROC/AUC requested for a class without both positives and negatives.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

}  // namespace chestnet
