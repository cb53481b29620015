// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/capture.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace emadir {

// A single correlation value E[x(t) y*(t-lag)]; negative lags allowed.
struct LagCorrelation {
    long lag_samples = 0;
    std::complex<double> value{0.0, 0.0};
};

LagCorrelation lag_correlation(std::span<const std::complex<double>> x, long lag_samples);

enum class EstimatorKind { standard, offset, inverse };

std::string to_string(EstimatorKind kind);

// Relative channel estimate. values[0] is the reference element, 1 by
// convention; values[i] is switched element i. tau_samples is 0 for the
// standard estimator. carrier_wavelength_m is carried for downstream angle
// conversion and may be 0 when unknown at estimation time.
struct RelativeChannel {
    std::vector<std::complex<double>> values;
    EstimatorKind estimator_kind = EstimatorKind::standard;
    std::size_t tau_samples = 0;
    double carrier_wavelength_m = 0.0;
    std::size_t n_packets_averaged = 1;
};

void validate(const RelativeChannel& h);

struct ClockEstimate {
    double period_samples = 0.0;
    double confidence_db = 0.0; // autocorrelation peak over median of other lags
};

struct InterferenceCheck {
    double score = 0.0;
    bool interfered = false;
};

// Fraction of the reference segment power below which a lag-tau reference
// self product is treated as carrying no signal energy.
inline constexpr double kDenominatorFloor = 0.01;

// h_i = mean(r_i r_ref*) / mean(|r_ref|^2) over each antenna's dwell.
RelativeChannel estimate_standard(const Packet& pkt, double carrier_wavelength_m = 0.0);

// h_i = mean(r_i(t) r_ref*(t-tau)) / mean(r_ref(t) r_ref*(t-tau)). With tau
// an integer multiple of the clock period the numerator keeps full signal
// energy while noise, white in time, contributes nothing at lag tau, which
// removes the correlated-noise bias of the standard estimator.
RelativeChannel estimate_offset(const Packet& pkt, std::size_t tau_samples,
                                double carrier_wavelength_m = 0.0,
                                double denominator_floor = kDenominatorFloor);

// h_i = mean(r_i(t-tau) r_ref*(t)) / mean(r_ref(t-tau) r_ref*(t)): the lag
// moves to the switched stream. Without interference this equals the offset
// estimate; an interferer weights the two differently, which is what
// detect_interference thresholds.
RelativeChannel estimate_inverse(const Packet& pkt, std::size_t tau_samples,
                                 double carrier_wavelength_m = 0.0,
                                 double denominator_floor = kDenominatorFloor);

// score = ||h_off - h_inv||_2 / ||h_off||_2, interfered iff score > threshold.
InterferenceCheck detect_interference(const RelativeChannel& h_off, const RelativeChannel& h_inv,
                                      double threshold = 0.1);

// Scans mean-removed autocorrelation magnitude over [min_period, max_period],
// refines the winning lag by parabolic interpolation. Throws
// NoClockFoundError when no lag reaches min_normalized_peak relative to R(0).
ClockEstimate detect_clock(std::span<const std::complex<double>> iq, std::size_t min_period,
                           std::size_t max_period, double min_normalized_peak = 0.05);

// Element-wise mean; inputs must share kind, tau and wavelength.
RelativeChannel average_channels(std::span<const RelativeChannel> channels);

// Relative channel at a single spectral line: h_i = X_i(f) X_ref*(f) /
// |X_ref(f)|^2 with f = harmonic / period_samples (cycles per sample).
// Clock harmonics concentrate the leakage energy, so per-harmonic estimates
// form natural frequency-diversity measurements for the joint solver.
RelativeChannel estimate_harmonic(const Packet& pkt, double period_samples,
                                  std::size_t harmonic, double carrier_wavelength_m = 0.0);

// Lag-product enhancement: y[t] = (1/K) sum_{k=1..K} x(t) x*(t - round(k tau)).
// The periodic component reproduces itself at every multiple of its period,
// so its products add coherently, while the K noise product terms are
// mutually uncorrelated and average down as 1/K. tau_samples = 0 degenerates
// to the plain power envelope |x|^2.
cvec enhance_product(std::span<const std::complex<double>> iq, double tau_samples,
                     std::size_t n_offsets);

// Peak of the magnitude spectrum at the clock fundamental or a harmonic over
// the median spectral floor, in dB. The stream is Hann windowed so the
// measurement is noise-limited rather than leakage-limited.
double spike_snr(std::span<const std::complex<double>> iq, const ClockEstimate& clock);

} // namespace emadir
