#pragma once

#include <stdexcept>
#include <string>

namespace dpp {

// Evaluation outside a trusted domain (annulus, unit circle, branch cut, ...).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An integrand pole (or Pochhammer zero) too close to the evaluation point.
struct pole_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadrature failed to reach the requested tolerance within the node cap.
struct nonconvergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Double-contour circles too close for the 1/(z-w) factor.
struct overlap_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (tau,chi) outside the liquid region A.
struct region_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Half-integer site or pattern violating the lattice parity constraint.
struct parity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sampling window does not cover the range required by a statistic.
struct coverage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conditional-sampling pivot collapsed beyond the tolerated clamp.
struct degeneracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad CLI configuration.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dpp
