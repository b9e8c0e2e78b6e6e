#pragma once

#include <stdexcept>
#include <string>

namespace epimi {

// Caller handed us something malformed: bad shapes, invalid probabilities,
// unparsable input files, out-of-range options.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// The computation itself broke down: optimizer failed to converge, separated
// data drove parameters to infinity, singular information matrix, diverging
// training loss.  Inputs were well-formed; the numbers were not cooperative.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace epimi
