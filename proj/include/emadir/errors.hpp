// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace emadir {

// Invalid argument or malformed input (bad geometry, bad file field,
// inconsistent dimensions). Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// File could not be read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A rational parameter could not be realized exactly (e.g. a clock period
// that is not representable at the sample rate when exactness is required).
class ResolutionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Reference channel power (or lag product) too small to normalize against.
class SingularChannelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The lag-tau reference self product is degenerate, so the offset estimator
// denominator carries no signal energy (e.g. tau at a half period of a
// 50%-duty clock, or a noise-only capture).
class DegenerateOffsetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// No periodic component stood out of the autocorrelation floor.
// Maps to CLI exit code 3.
class NoClockFoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An angular profile had no coefficient above the extraction threshold.
class NoPathFoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Triangulation normal equations are near singular (parallel bearings,
// fewer than two usable bearings after weighting).
class IllConditionedError : public std::runtime_error {
  public:
    explicit IllConditionedError(const std::string& what, double condition)
        : std::runtime_error(what), condition(condition) {}

    double condition;
};

// Inputs that must share provenance (estimator kind, lag, wavelength,
// dimension) do not.
class ProvenanceError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

} // namespace emadir
