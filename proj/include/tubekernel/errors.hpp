#pragma once

#include <stdexcept>
#include <string>

namespace tubekernel {

// Input that violates a documented precondition (dimension mismatch,
// asymmetric body, non-positive dilation factor, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : InvalidArgument("dimension mismatch: expected " + std::to_string(expected) +
                          ", got " + std::to_string(got)) {}
};

// An integral that is infinite (or a ray along which the weight does not grow).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive refinement exhausted its evaluation budget before the requested
// tolerance was met.
class ToleranceNotReached : public std::runtime_error {
public:
    ToleranceNotReached(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class NonIntegrableSingularity : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gram matrix too ill-conditioned for a trustworthy inverse.
class IllConditioned : public std::runtime_error {
public:
    IllConditioned(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class NotComputable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tubekernel
