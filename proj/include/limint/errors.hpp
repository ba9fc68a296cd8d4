#pragma once

#include <stdexcept>
#include <string>

namespace limint {

/// Raised when an invariant-gradient Gram matrix is numerically singular,
/// i.e. the enforced constraints are not independent at the current state.
struct degeneracy_error : std::runtime_error {
    explicit degeneracy_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an iteration produces NaN/Inf and cannot continue.
struct divergence_error : std::runtime_error {
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a linear stage system cannot be factored; the usual remedy
/// is a smaller stepsize.
struct singular_iteration_error : std::runtime_error {
    explicit singular_iteration_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace limint
