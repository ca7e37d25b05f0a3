#pragma once

#include <stdexcept>
#include <string>

namespace shapesig {

/// Malformed input: unreadable files, bad indices, incompatible sizes.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: singular factorizations, divergent iterations,
/// eigensolvers that ran out of budget.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or command-line usage.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace shapesig
