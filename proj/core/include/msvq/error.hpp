#pragma once

#include <stdexcept>
#include <string>

namespace msvq {

enum class ErrorKind {
    config,
    data,
    corruption,
    state,
    index,
    numerical,
    size_guard,
};

/// Base of every error raised by the codec. The kind selects the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// config=2, data=3, corruption=4, state=5, anything else 1.
    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::config: return 2;
            case ErrorKind::data: return 3;
            case ErrorKind::corruption: return 4;
            case ErrorKind::state: return 5;
            default: return 1;
        }
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct CorruptionError : Error {
    explicit CorruptionError(const std::string& w)
        : Error(ErrorKind::corruption, w) {}
};

struct StateError : Error {
    explicit StateError(const std::string& w) : Error(ErrorKind::state, w) {}
};

struct IndexError : Error {
    explicit IndexError(const std::string& w) : Error(ErrorKind::index, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w)
        : Error(ErrorKind::numerical, w) {}
};

struct SizeGuardError : Error {
    explicit SizeGuardError(const std::string& w)
        : Error(ErrorKind::size_guard, w) {}
};

} // namespace msvq
