#pragma once

#include <stdexcept>
#include <string>

namespace infratl {

/// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
    domain = 10,        // argument outside the mathematical domain
    shape = 11,         // tensor / grid / file shape mismatch
    numerical = 12,     // NaN/Inf, failed root finding, singular solve
    precondition = 13,  // caller violated a documented precondition
    io = 14,            // missing or unreadable file, bad container
    config = 15,        // malformed configuration document
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) throw Error(kind, what);
}

}  // namespace infratl
