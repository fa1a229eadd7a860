#pragma once

#include <stdexcept>
#include <string>

namespace tcm {

/// Raised when an explicit time step would amplify finite-difference
/// eigenmodes, or when a step produced non-finite or clearly negative
/// probabilities.
class StabilityViolation : public std::runtime_error {
public:
    explicit StabilityViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when prediction and measurement are in total conflict at a node
/// (the Bayes normalizer underflows).
class DegenerateUpdate : public std::runtime_error {
public:
    explicit DegenerateUpdate(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tcm
