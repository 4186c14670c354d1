#pragma once

#include <stdexcept>

namespace opa {

// A truncated Fock computation would neglect more probability mass than
// the configured tail tolerance allows.
struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numeric invariant broke: negative probability beyond roundoff scale,
// non-finite amplitude, or a series that failed to converge.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An evaluation grid does not cover the state's support.
struct grid_error : numeric_error {
    using numeric_error::numeric_error;
};

}  // namespace opa
