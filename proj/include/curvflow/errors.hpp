#pragma once

#include <stdexcept>
#include <string>

namespace curvflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A coordinate left the positive cone (or a spectrum left SPD).
struct DomainError : Error {
    using Error::Error;
};

// Structurally invalid speed-function descriptor.
struct InvalidSpec : Error {
    using Error::Error;
};

struct ArityMismatch : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

// Jacobi sweeps exceeded the iteration cap.
struct ConvergenceFailure : Error {
    using Error::Error;
};

// Eigenvalue gaps below the divided-difference threshold where a
// distinct spectrum is required.
struct DegenerateSpectrum : Error {
    using Error::Error;
};

// Pinch-instance spectrum not strictly increasing / positive / gapped.
struct InvalidSpectrum : Error {
    using Error::Error;
};

struct NonConvexShape : Error {
    using Error::Error;
};

struct ConvexityLost : Error {
    using Error::Error;
};

struct StabilityFailure : Error {
    using Error::Error;
};

}  // namespace curvflow
