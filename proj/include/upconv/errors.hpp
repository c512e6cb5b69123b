#pragma once

#include <stdexcept>
#include <string>

namespace upconv {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or input files. CLI maps these to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Incompatible shard summaries (different configs or histogram layouts).
struct ConfigMismatch : ConfigError {
    using ConfigError::ConfigError;
};

// Physics-level validation failures. CLI maps these to exit code 3.
struct PhysicsError : Error {
    using Error::Error;
};

// Profile has zero (or infinite) integral and cannot be normalized.
struct ZeroMass : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Operation requires density semantics but got a power profile (or vice versa).
struct SemanticsError : PhysicsError {
    using PhysicsError::PhysicsError;
};

// More than one half-maximum crossing pair where a single peak is required.
struct Multimodal : PhysicsError {
    using PhysicsError::PhysicsError;
};

// No peak above background.
struct NoPeak : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Photon wavepacket and pump gate do not overlap.
struct ZeroOverlap : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Pump pulse narrower than the quasi-phase-matching acceptance allows.
struct QpmViolation : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Histogram bin wider than the sync period.
struct BinTooLarge : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Correlation window contains no complete side peaks to normalize against.
struct NoSidePeaks : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Too few usable counts for a fit.
struct InsufficientCounts : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Too few sweep points for a fit.
struct InsufficientPoints : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Peak heights do not decay; no finite lifetime.
struct NonDecaying : PhysicsError {
    using PhysicsError::PhysicsError;
};

// Both rates zero in an analytic g2 evaluation.
struct BothZero : PhysicsError {
    using PhysicsError::PhysicsError;
};

}  // namespace upconv
