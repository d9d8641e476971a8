#pragma once

#include <stdexcept>
#include <string>

namespace kinmarket {

/// Base of every exception thrown by the library. The category is the
/// machine-readable tag printed by the CLI as `ERROR:<category>:`.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// Invalid parameters or configuration, detected before any work starts.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// A function was evaluated outside its mathematical domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Quadrature or root finding failed to reach the requested tolerance.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};

/// A simulation invariant was violated (negative price, |y| > 1, ...).
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error("invariant", what) {}
};

} // namespace kinmarket
