#pragma once

#include <stdexcept>
#include <string>

namespace mfp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent data: ragged CSV, schema mismatch, unseen level.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// File system or serialization failure (bad magic, CRC mismatch, version).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Input that makes a formula undefined (constant truth vector, single class).
class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& msg) : Error(msg) {}
};

} // namespace mfp
