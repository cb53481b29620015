// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/dsp.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace emadir {

// A leaking digital clock: a square wave at clock_hz observed at complex
// baseband. duty is the fraction of each period spent at `amplitude`; the
// rest of the period is zero (rectified envelope, the emanation rides an
// on/off keying of the carrier). An optional activity gate models devices
// whose clock is only driven while a workload runs: the wave is multiplied
// by a second, much slower square gate.
struct EmanationSource {
    double clock_hz = 3000.0;
    double duty = 0.5;
    double amplitude = 1.0;
    std::array<double, 2> position_m{0.0, 0.0};

    // 0 disables the gate (always on).
    double activity_period_s = 0.0;
    double activity_duty = 1.0;
};

// Uniform linear array: one fixed reference antenna plus n_switched antennas
// sampled one at a time. Element i of a relative channel vector corresponds
// to the antenna at distance i * spacing_m from the reference.
struct ArrayGeometry {
    std::size_t n_switched = 8;
    double spacing_m = 0.0625;
    double carrier_wavelength_m = 0.625;

    double d_over_lambda() const { return spacing_m / carrier_wavelength_m; }
};

struct Path {
    double aoa_rad = 0.0;             // relative to array broadside
    std::complex<double> gain{1.0, 0.0};
};

struct PathSet {
    std::vector<Path> paths;
};

// Additive complex noise. Each stream is white in time; streams share a
// common component so that co-timed samples of two streams have correlation
// rho (receiver chains fed from the same LO and supply see correlated noise).
struct NoiseModel {
    double power = 0.0; // E|n|^2 per sample
    double rho = 0.0;   // cross-stream correlation at lag 0
    std::uint64_t seed = 1;
};

// A second clock-bearing emitter. alpha[i] is its complex gain at switched
// antenna i+1 relative to the reference antenna (the reference sees gain 1),
// i.e. the same quantity true_relative_channel() yields for the wanted
// source. baseband_offset_hz is the residual carrier offset after
// downconversion; two free-running emitters never land on the exact same
// baseband frequency, and the offset is what makes their lag products
// distinguishable.
struct InterferenceSource {
    EmanationSource source;
    std::vector<std::complex<double>> alpha;
    double baseband_offset_hz = 0.0;
    double phase0 = 0.0; // starting phase, fraction of a clock period
};

void validate(const EmanationSource& src);
void validate(const ArrayGeometry& geom);
void validate(const PathSet& paths);
void validate(const NoiseModel& noise);

// Baseband samples of the clock wave: amplitude where the phase
// (t / fs + phase0 * period) mod period falls in the first duty fraction of
// the period, zero elsewhere, gated by the activity window. Imaginary parts
// are zero; the return type is complex so the wave composes directly with
// channel gains and noise.
cvec synthesize(const EmanationSource& src, double fs, std::size_t n_samples,
                double phase0 = 0.0);

// Relative channel h[0..n_switched] under the multipath model:
//   h[i] = sum_k w_k exp(-j 2 pi sin(aoa_k) (d/lambda) i) / sum_k w_k,
// so h[0] == 1 exactly. Throws SingularChannelError when the gains cancel
// at the reference (|sum_k w_k| ~ 0).
std::vector<std::complex<double>> true_relative_channel(const ArrayGeometry& geom,
                                                        const PathSet& paths);

// n_streams white noise streams of n_samples each with per-sample power
// model.power and pairwise co-timed correlation model.rho, built as
// sqrt(rho) * common + sqrt(1-rho) * private_i.
std::vector<cvec> generate_correlated_noise(const NoiseModel& model, std::size_t n_streams,
                                            std::size_t n_samples);

} // namespace emadir
