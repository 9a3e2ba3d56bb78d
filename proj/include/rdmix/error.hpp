#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Raised when an iterative solve stops before reaching its tolerance. Carries the
/// last iterate and the achieved relative residual.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> iterate, double residual)
        : Error(what), iterate_(std::move(iterate)), residual_(residual) {}

    const std::vector<double>& iterate() const noexcept { return iterate_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> iterate_;
    double residual_;
};

#define RDMIX_REQUIRE(cond, ExceptionType, msg)                                               \
    do {                                                                                      \
        if (!(cond)) throw ExceptionType(msg);                                                \
    } while (0)

} // namespace rdmix
