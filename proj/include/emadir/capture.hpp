// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/emamodel.hpp"

#include <span>
#include <string>
#include <vector>

namespace emadir {

// Switch timing for the time-multiplexed port. order lists switch port
// indices in [0, n_antennas); port p feeds the antenna at distance
// (p+1) * spacing from the reference, i.e. relative-channel element p+1.
struct SwitchSchedule {
    std::size_t n_antennas = 8;
    std::size_t dwell_samples = 96000;
    std::size_t guard_samples = 960;
    std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6, 7};

    std::size_t packet_len_samples() const { return n_antennas * dwell_samples; }
};

void validate(const SwitchSchedule& schedule);

// Two sample-aligned streams from a synchronized two-port acquisition: the
// fixed reference antenna and the switched port. Stream length is an integer
// number of full sweeps.
struct IQCapture {
    double fs = 3.072e6;
    cvec ref_stream;
    cvec switched_stream;
    SwitchSchedule schedule;
    std::size_t packet_len_samples = 0;

    std::size_t n_sweeps() const {
        return packet_len_samples == 0 ? 0 : ref_stream.size() / packet_len_samples;
    }
};

void validate(const IQCapture& cap);

// One full switch sweep with guard samples already discarded. Each segment
// pairs the switched-port samples with the co-timed reference samples so
// estimators can correlate them directly.
struct Packet {
    struct Segment {
        std::size_t antenna = 1; // relative-channel element index (1-based)
        cvec switched;
        cvec reference;
    };

    std::size_t sweep_index = 0;
    double fs = 0.0;
    std::vector<Segment> segments;
};

// Simulates the acquisition: ref_stream = s(t) + sum_j d_j(t) + n_ref(t);
// switched_stream while port p is selected = h[p+1] s(t)
// + sum_j alpha_j[p] d_j(t) + n_{p+1}(t). Noise streams follow the
// common+private construction of generate_correlated_noise (only the
// selected antenna's private stream is materialized at any instant, which
// is statistically identical). Deterministic for fixed seeds and phases.
IQCapture simulate_capture(const EmanationSource& src, const ArrayGeometry& geom,
                           const PathSet& paths, const NoiseModel& noise,
                           const SwitchSchedule& schedule, double fs, std::size_t n_sweeps,
                           std::span<const InterferenceSource> interferers = {},
                           double source_phase0 = 0.0);

std::vector<Packet> packetize(const IQCapture& cap);

// <prefix>.ref.iq and <prefix>.sw.iq hold header-less interleaved
// little-endian float32 I/Q pairs; <prefix>.meta is flat `key = value` text
// (fs, n_antennas, dwell_samples, guard_samples, order, packet_len).
// read(write(cap)) is bit exact provided every sample is float32
// representable (captures read from disk always are).
void write_capture(const IQCapture& cap, const std::string& path_prefix);
IQCapture read_capture(const std::string& path_prefix);

} // namespace emadir
