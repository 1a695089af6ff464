#pragma once

#include <stdexcept>
#include <string>

namespace polytrans {

// Base for every error the library raises. The CLI maps ConfigError and
// its subclasses to exit status 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller-supplied configuration or input violates a documented invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ValidationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class UnknownLanguageError : public ConfigError {
public:
    explicit UnknownLanguageError(const std::string& id)
        : ConfigError("unknown language '" + id + "'"), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// Malformed file contents. Line numbers are 1-based; 0 means "not line-oriented".
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ConfigError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaVersionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ToolchainMissingError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Transport-level inference failure after the retry budget is spent.
class BackendError : public Error {
public:
    using Error::Error;
};

// The scripted mock received a request it has no answer for.
class ScenarioGapError : public Error {
public:
    using Error::Error;
};

class WorkspaceError : public Error {
public:
    using Error::Error;
};

}  // namespace polytrans
