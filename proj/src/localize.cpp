// SPDX-License-Identifier: Apache-2.0
#include "emadir/localize.hpp"

#include "emadir/errors.hpp"

#include <cmath>

namespace emadir {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

LocalizationResult triangulate(std::span<const Bearing> bearings, double condition_floor) {
    if (bearings.size() < 2)
        throw ValidationError("triangulate: at least 2 bearings are required, got " +
                              std::to_string(bearings.size()));

    // Normal equations for sum_i w_i (n_i . x - n_i . o_i)^2 with
    // n_i = (-sin g, cos g) perpendicular to the ray direction.
    double axx = 0.0, axy = 0.0, ayy = 0.0, bx = 0.0, by = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < bearings.size(); ++i) {
        const Bearing& b = bearings[i];
        if (!std::isfinite(b.origin_m[0]) || !std::isfinite(b.origin_m[1]) ||
            !std::isfinite(b.global_angle_rad))
            throw ValidationError("triangulate: bearing " + std::to_string(i) +
                                  " has non-finite fields");
        if (!(b.confidence >= 0.0))
            throw ValidationError("triangulate: bearing " + std::to_string(i) +
                                  " confidence must be nonnegative");
        const double nx = -std::sin(b.global_angle_rad);
        const double ny = std::cos(b.global_angle_rad);
        const double d = nx * b.origin_m[0] + ny * b.origin_m[1];
        axx += b.confidence * nx * nx;
        axy += b.confidence * nx * ny;
        ayy += b.confidence * ny * ny;
        bx += b.confidence * d * nx;
        by += b.confidence * d * ny;
        wsum += b.confidence;
    }
    if (!(wsum > 0.0))
        throw ValidationError("triangulate: all bearing confidences are zero");

    // Eigenvalues of the symmetric 2x2 system give its singular values.
    const double tr = axx + ayy;
    const double det = axx * ayy - axy * axy;
    const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double lmin = std::max(tr / 2.0 - disc, 0.0);
    const double condition = std::sqrt(lmin / wsum);
    if (condition < condition_floor)
        throw IllConditionedError("triangulate: bearings are near parallel (condition " +
                                      std::to_string(condition) + " below floor " +
                                      std::to_string(condition_floor) + ")",
                                  condition);

    const double inv_det = 1.0 / det;
    LocalizationResult res;
    res.position_m[0] = inv_det * (ayy * bx - axy * by);
    res.position_m[1] = inv_det * (axx * by - axy * bx);
    res.n_bearings = bearings.size();
    res.condition = condition;

    double rss = 0.0;
    for (const Bearing& b : bearings) {
        const double nx = -std::sin(b.global_angle_rad);
        const double ny = std::cos(b.global_angle_rad);
        const double dist = nx * (res.position_m[0] - b.origin_m[0]) +
                            ny * (res.position_m[1] - b.origin_m[1]);
        rss += b.confidence * dist * dist;
    }
    res.residual_m = std::sqrt(rss / wsum);
    return res;
}

double aoa_error_deg(const AoAEstimate& est, const PathSet& truth) {
    if (est.angles_rad.empty())
        throw ValidationError("aoa_error_deg: empty estimate");
    validate(truth);
    std::size_t dominant = 0;
    for (std::size_t k = 1; k < truth.paths.size(); ++k)
        if (std::abs(truth.paths[k].gain) > std::abs(truth.paths[dominant].gain))
            dominant = k;
    return std::abs(est.angles_rad[0] - truth.paths[dominant].aoa_rad) * 180.0 / kPi;
}

double localization_error_m(const LocalizationResult& result,
                            const std::array<double, 2>& truth_position_m) {
    const double dx = result.position_m[0] - truth_position_m[0];
    const double dy = result.position_m[1] - truth_position_m[1];
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace emadir
