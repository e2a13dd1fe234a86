#pragma once

#include <stdexcept>
#include <string>

namespace bnf {

// Validation failures map to CLI exit code 1, numeric failures to exit code 2.

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class UnsupportedManifold : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A nonresonant monomial whose small divisor is below the hard floor.
class NearResonantMass : public NumericError {
public:
    NearResonantMass(const std::string& what, int step = -1)
        : NumericError(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// Trajectory norm exceeded the blow-up threshold.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, double last_valid_time)
        : NumericError(what), last_valid_time_(last_valid_time) {}
    double last_valid_time() const { return last_valid_time_; }

private:
    double last_valid_time_;
};

/// Adaptive step size underflow while flowing a generator.
class FlowFailure : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace bnf
