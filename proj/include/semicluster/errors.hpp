// errors.hpp - exception types thrown across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace semicluster {

/// Intermediate symbol degree exceeded the configured cap.
struct DegreeOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A resonant monomial appeared where the caller asserted it was averaged away,
/// or an operation needing a periodic flow received a non-resonant input.
struct ResonanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid physical model (non-positive frequencies, non-flow-invariant input, ...).
struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Iterative numerical method failed to converge within its cap.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Query outside the charted regular region, or too close to a critical value.
struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cluster widths reached the inter-cluster gap: epsilon too large relative to h.
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Truncation or index out of range in the Fock realization.
struct TruncationError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

}  // namespace semicluster
