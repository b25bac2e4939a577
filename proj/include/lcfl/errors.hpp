#pragma once

#include <stdexcept>
#include <string>

namespace lcfl {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dimension or layout mismatch between parameters, features, or matrices.
struct ShapeError : Error {
    using Error::Error;
};

// An operation that needs at least one sample received none.
struct EmptyInputError : Error {
    using Error::Error;
};

// Operation not defined for the given model kind (e.g. accuracy of a regressor).
struct UnsupportedOperationError : Error {
    using Error::Error;
};

// Invalid configuration value (out-of-range rate, delta outside (0,1), ...).
struct ParameterError : Error {
    using Error::Error;
};

// Binary input file does not match the expected layout.
struct FormatError : Error {
    FormatError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Moment matrix singular or too ill-conditioned to solve.
struct SingularityError : Error {
    using Error::Error;
};

// Local training produced a non-finite loss or parameter.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, std::size_t step_index, int client = -1)
        : Error(what + " (step " + std::to_string(step_index) +
                (client >= 0 ? ", client " + std::to_string(client) : "") + ")"),
          step(step_index),
          client_id(client) {}
    std::size_t step;
    int client_id;
};

// The split-and-sum exchange is missing (or duplicates) ordered pairs.
struct IncompleteProtocolError : Error {
    using Error::Error;
};

// A precondition of a closed-form derivation does not hold.
struct ContractError : Error {
    using Error::Error;
};

// Generator family collapses (duplicate cross-covariances, ...).
struct DegenerateFamilyError : Error {
    using Error::Error;
};

// Sample pool cannot serve a requested class.
struct InsufficientPoolError : Error {
    using Error::Error;
};

// Experiment configs differ where they must agree to be compared.
struct ComparabilityError : Error {
    using Error::Error;
};

// Requested iteration/index outside the recorded range.
struct RangeError : Error {
    using Error::Error;
};

}  // namespace lcfl
