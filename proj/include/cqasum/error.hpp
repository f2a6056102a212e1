#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cqasum {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// A JSONL record that cannot be parsed or violates a field invariant.
class ParseError : public DataError {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : DataError(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class ReferentialIntegrityError : public DataError {
public:
    ReferentialIntegrityError(std::string dangling_id, const std::string& context)
        : DataError(context + ": unknown entity_id \"" + dangling_id + "\""),
          dangling_id_(std::move(dangling_id)) {}

    const std::string& dangling_id() const noexcept { return dangling_id_; }

private:
    std::string dangling_id_;
};

class DuplicateIdError : public DataError {
public:
    DuplicateIdError(std::string id, const std::string& context)
        : DataError(context + ": duplicate id \"" + id + "\""), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

/// Invalid arguments or configuration. The CLI maps this to exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Iterative numerics or training that did not finish. Exit code 3.
class TrainingFailure : public Error {
public:
    using Error::Error;
};

} // namespace cqasum
