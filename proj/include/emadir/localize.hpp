// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/aoasolve.hpp"
#include "emadir/emamodel.hpp"

#include <array>
#include <span>

namespace emadir {

// A ray from a vantage point: global_angle_rad = vantage heading + local AoA.
struct Bearing {
    std::array<double, 2> origin_m{0.0, 0.0};
    double global_angle_rad = 0.0;
    double confidence = 1.0;
};

struct LocalizationResult {
    std::array<double, 2> position_m{0.0, 0.0};
    double residual_m = 0.0;   // weighted RMS perpendicular distance
    std::size_t n_bearings = 0;
    double condition = 0.0;    // normalized smallest singular value of the system
};

// Weighted least-squares intersection point: minimizes the sum of
// confidence-weighted squared perpendicular distances to the bearing lines
// via the 2x2 normal equations. condition is sqrt(lambda_min(A) / sum(w)),
// which is 0 for parallel bearings and reaches sqrt(1/2) for an orthogonal
// pair; below condition_floor an IllConditionedError carries the value.
LocalizationResult triangulate(std::span<const Bearing> bearings,
                               double condition_floor = 1e-6);

// Absolute angular difference in degrees between the highest-weight
// estimated path and the highest-gain true path.
double aoa_error_deg(const AoAEstimate& est, const PathSet& truth);

double localization_error_m(const LocalizationResult& result,
                            const std::array<double, 2>& truth_position_m);

} // namespace emadir
