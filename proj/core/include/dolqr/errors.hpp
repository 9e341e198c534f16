#pragma once

#include <stdexcept>
#include <string>

namespace dolqr {

// Violated precondition or type invariant (bad dimensions, asymmetry, ...).
struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An iteration left its admissible region (unstable closed loop, runaway
// EXTRA step, state overflow during exploration).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dolqr
