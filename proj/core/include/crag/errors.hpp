// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace crag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad index, empty input, mismatched dimensions).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A CSV header does not carry a mapped column.
class SchemaError : public Error {
public:
    SchemaError(std::string column, const std::string& message)
        : Error(message), column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// Input stream could not be read or is malformed beyond recovery.
class InputError : public Error {
public:
    using Error::Error;
};

/// On-disk artifact is missing or corrupt. `line()` is 0 when not line-specific.
class StorageError : public Error {
public:
    StorageError(const std::string& message, std::size_t line = 0)
        : Error(message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network failure that survived every retry.
class TransportError : public Error {
public:
    TransportError(const std::string& message, int attempts)
        : Error(message), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// A backend answered, but with a refusal or an empty text. Not retried.
class GenerationError : public Error {
public:
    using Error::Error;
};

class TokenizerError : public Error {
public:
    TokenizerError(std::string tokenizer_id, const std::string& message)
        : Error(message), tokenizer_id_(std::move(tokenizer_id)) {}

    const std::string& tokenizer_id() const noexcept { return tokenizer_id_; }

private:
    std::string tokenizer_id_;
};

/// Ratio or similarity that is mathematically undefined for the inputs.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    enum class Missing { product, method };

    NotFoundError(Missing missing, const std::string& message)
        : Error(message), missing_(missing) {}

    Missing missing() const noexcept { return missing_; }

private:
    Missing missing_;
};

/// One cluster of a product failed to summarize; the product's document is abandoned.
class PartialFailureError : public Error {
public:
    PartialFailureError(std::string product_id, std::size_t cluster_index, const std::string& message)
        : Error(message), product_id_(std::move(product_id)), cluster_index_(cluster_index) {}

    const std::string& product_id() const noexcept { return product_id_; }
    std::size_t cluster_index() const noexcept { return cluster_index_; }

private:
    std::string product_id_;
    std::size_t cluster_index_;
};

/// A model call made on behalf of a client failed; carries the request's correlation id.
class UpstreamError : public Error {
public:
    UpstreamError(std::string correlation_id, const std::string& message)
        : Error(message), correlation_id_(std::move(correlation_id)) {}

    const std::string& correlation_id() const noexcept { return correlation_id_; }

private:
    std::string correlation_id_;
};

/// A CLI stage ran before the stage it depends on.
class StageError : public Error {
public:
    StageError(std::string required_command, const std::string& message)
        : Error(message), required_command_(std::move(required_command)) {}

    const std::string& required_command() const noexcept { return required_command_; }

private:
    std::string required_command_;
};

/// The HTTP service could not start (for example, the port is taken).
class StartupError : public Error {
public:
    using Error::Error;
};

}  // namespace crag
