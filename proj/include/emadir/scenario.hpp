// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/aoasolve.hpp"
#include "emadir/capture.hpp"
#include "emadir/emamodel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace emadir {

// A vantage: a receiver array placed at position_m with its broadside
// pointing along heading_deg (degrees, counterclockwise from +x). The direct
// path to the source must fall in the forward half-plane. extra_paths adds
// multipath components with angles relative to the array broadside and gains
// relative to the direct path (which has gain 1).
struct VantageConfig {
    std::array<double, 2> position_m{0.0, 0.0};
    double heading_deg = 0.0;
    std::vector<Path> extra_paths;
};

struct InterfererConfig {
    EmanationSource source; // amplitude at 1 m; position in source.position_m
    double baseband_offset_hz = 0.0;
    double phase0 = 0.0;
};

enum class TauPolicy { period, fixed, none };

// Parsed scenario file. Source and interferer amplitudes are referenced to
// 1 m; the received amplitude at a vantage is amplitude / max(range, 0.1 m).
struct Scenario {
    EmanationSource source;
    std::vector<InterfererConfig> interferers;

    ArrayGeometry array;
    double fs = 3.072e6;
    std::size_t dwell_samples = 96000;
    std::size_t guard_samples = 960;
    std::vector<std::size_t> order; // empty = identity

    std::vector<VantageConfig> vantages;
    NoiseModel noise; // seed is derived per vantage from run seed

    TauPolicy tau_policy = TauPolicy::period;
    std::size_t tau_fixed = 0;
    std::size_t n_packets = 4;
    std::size_t retries = 2;
    double interference_threshold = 0.1;
    std::size_t snr_offsets = 16;
    std::size_t clock_min_period = 2;
    std::size_t clock_max_period = 8192;

    AoAMethod method = AoAMethod::sparse;
    double beta = 1.0;
    std::size_t grid_size = 256;
    double lambda_group = 1.0;
    double rel_threshold = 0.05;
    std::size_t joint_harmonics = 3;
    SolveOptions solve_opts;

    std::uint64_t seed = 1;
    std::size_t n_sweeps = 12;
    std::string out_dir = "out";

    SwitchSchedule schedule() const;
};

// Parses the sectioned `key = value` scenario format. Sections: [source],
// [interferer.N], [array], [vantage.N], [noise], [estimator], [solver],
// [run]. Unknown sections or keys, bad values and violated cross-field
// invariants raise ValidationError naming the offending section.key.
Scenario parse_scenario_text(const std::string& text, const std::string& origin);
Scenario parse_scenario(const std::string& path);

void validate(const Scenario& sc);

} // namespace emadir
