// SPDX-License-Identifier: Apache-2.0
#include "emadir/chanest.hpp"

#include "emadir/dsp.hpp"
#include "emadir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emadir {

namespace {
constexpr double kPi = 3.14159265358979323846;

double median_of(std::vector<double> v) {
    if (v.empty())
        return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

void validate_packet(const Packet& pkt) {
    if (pkt.segments.empty())
        throw ValidationError("Packet: no antenna segments");
    for (const auto& seg : pkt.segments) {
        if (seg.antenna == 0)
            throw ValidationError("Packet: antenna indices are 1-based");
        if (seg.switched.empty() || seg.switched.size() != seg.reference.size())
            throw ValidationError("Packet: antenna " + std::to_string(seg.antenna) +
                                  " segment must pair equal-length nonempty streams");
    }
}

// Collects per-antenna ratios into a channel vector with values[0] = 1.
RelativeChannel assemble(const Packet& pkt,
                         const std::vector<std::complex<double>>& ratios,
                         EstimatorKind kind, std::size_t tau, double wavelength) {
    RelativeChannel h;
    h.values.assign(pkt.segments.size() + 1, std::complex<double>(0.0, 0.0));
    h.values[0] = std::complex<double>(1.0, 0.0);
    std::vector<bool> seen(h.values.size(), false);
    for (std::size_t s = 0; s < pkt.segments.size(); ++s) {
        const std::size_t a = pkt.segments[s].antenna;
        if (a >= h.values.size() || seen[a])
            throw ValidationError("Packet: antenna indices must cover 1.." +
                                  std::to_string(pkt.segments.size()) + " exactly once");
        seen[a] = true;
        h.values[a] = ratios[s];
    }
    h.estimator_kind = kind;
    h.tau_samples = tau;
    h.carrier_wavelength_m = wavelength;
    h.n_packets_averaged = 1;
    return h;
}

double segment_ref_power(const Packet::Segment& seg) {
    double acc = 0.0;
    for (const auto& v : seg.reference)
        acc += std::norm(v);
    return acc / static_cast<double>(seg.reference.size());
}

} // namespace

LagCorrelation lag_correlation(std::span<const std::complex<double>> x, long lag_samples) {
    const std::size_t alag = static_cast<std::size_t>(std::labs(lag_samples));
    if (alag >= x.size())
        throw ValidationError("lag_correlation: |lag| must be below the sample count");
    std::complex<double> acc(0.0, 0.0);
    if (lag_samples >= 0) {
        for (std::size_t t = alag; t < x.size(); ++t)
            acc += x[t] * std::conj(x[t - alag]);
    } else {
        for (std::size_t t = alag; t < x.size(); ++t)
            acc += x[t - alag] * std::conj(x[t]);
    }
    return {lag_samples, acc / static_cast<double>(x.size() - alag)};
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::standard:
        return "standard";
    case EstimatorKind::offset:
        return "offset";
    case EstimatorKind::inverse:
        return "inverse";
    }
    return "?";
}

void validate(const RelativeChannel& h) {
    if (h.values.empty())
        throw ValidationError("RelativeChannel: empty");
    if (std::abs(h.values[0] - std::complex<double>(1.0, 0.0)) > 1e-12)
        throw ValidationError("RelativeChannel: values[0] must be 1 (reference convention)");
    for (const auto& v : h.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ValidationError("RelativeChannel: non-finite entry");
}

RelativeChannel estimate_standard(const Packet& pkt, double carrier_wavelength_m) {
    validate_packet(pkt);
    std::vector<std::complex<double>> ratios(pkt.segments.size());
    for (std::size_t s = 0; s < pkt.segments.size(); ++s) {
        const auto& seg = pkt.segments[s];
        std::complex<double> num(0.0, 0.0);
        double den = 0.0;
        for (std::size_t t = 0; t < seg.reference.size(); ++t) {
            num += seg.switched[t] * std::conj(seg.reference[t]);
            den += std::norm(seg.reference[t]);
        }
        if (den <= 0.0)
            throw SingularChannelError("estimate_standard: zero reference power in antenna " +
                                       std::to_string(seg.antenna) + " segment");
        ratios[s] = num / den;
    }
    return assemble(pkt, ratios, EstimatorKind::standard, 0, carrier_wavelength_m);
}

namespace {

RelativeChannel estimate_lagged(const Packet& pkt, std::size_t tau_samples,
                                double carrier_wavelength_m, double denominator_floor,
                                bool inverse) {
    validate_packet(pkt);
    if (tau_samples == 0)
        throw ValidationError("offset estimator: tau_samples must be at least 1");
    std::vector<std::complex<double>> ratios(pkt.segments.size());
    for (std::size_t s = 0; s < pkt.segments.size(); ++s) {
        const auto& seg = pkt.segments[s];
        if (seg.reference.size() <= tau_samples)
            throw ValidationError("offset estimator: tau " + std::to_string(tau_samples) +
                                  " must be below the usable segment length " +
                                  std::to_string(seg.reference.size()));
        std::complex<double> num;
        std::complex<double> den;
        if (!inverse) {
            num = lag_product(seg.switched, seg.reference, tau_samples);
            den = lag_product(seg.reference, seg.reference, tau_samples);
        } else {
            // E[r_i(t-tau) r_ref*(t)] = conj(E[r_ref(t) r_i*(t-tau)])
            num = std::conj(lag_product(seg.reference, seg.switched, tau_samples));
            den = std::conj(lag_product(seg.reference, seg.reference, tau_samples));
        }
        const double floor = denominator_floor * segment_ref_power(seg);
        if (std::abs(den) < floor)
            throw DegenerateOffsetError(
                "offset estimator: lag-" + std::to_string(tau_samples) +
                " reference product magnitude " + std::to_string(std::abs(den)) +
                " is below the floor " + std::to_string(floor) +
                " (tau misaligned with the signal period, or signal absent)");
        ratios[s] = num / den;
    }
    return assemble(pkt, ratios, inverse ? EstimatorKind::inverse : EstimatorKind::offset,
                    tau_samples, carrier_wavelength_m);
}

} // namespace

RelativeChannel estimate_offset(const Packet& pkt, std::size_t tau_samples,
                                double carrier_wavelength_m, double denominator_floor) {
    return estimate_lagged(pkt, tau_samples, carrier_wavelength_m, denominator_floor, false);
}

RelativeChannel estimate_inverse(const Packet& pkt, std::size_t tau_samples,
                                 double carrier_wavelength_m, double denominator_floor) {
    return estimate_lagged(pkt, tau_samples, carrier_wavelength_m, denominator_floor, true);
}

RelativeChannel estimate_harmonic(const Packet& pkt, double period_samples,
                                  std::size_t harmonic, double carrier_wavelength_m) {
    validate_packet(pkt);
    if (!(period_samples >= 2.0))
        throw ValidationError("estimate_harmonic: period must be at least 2 samples");
    if (harmonic == 0 || static_cast<double>(harmonic) >= period_samples / 2.0)
        throw ValidationError("estimate_harmonic: harmonic " + std::to_string(harmonic) +
                              " must lie in [1, period/2)");

    const double f = static_cast<double>(harmonic) / period_samples; // cycles per sample
    std::vector<std::complex<double>> ratios(pkt.segments.size());
    for (std::size_t s = 0; s < pkt.segments.size(); ++s) {
        const auto& seg = pkt.segments[s];
        std::complex<double> x_sw(0.0, 0.0);
        std::complex<double> x_ref(0.0, 0.0);
        for (std::size_t t = 0; t < seg.reference.size(); ++t) {
            const double ph = -2.0 * kPi * f * static_cast<double>(t);
            const std::complex<double> e(std::cos(ph), std::sin(ph));
            x_sw += seg.switched[t] * e;
            x_ref += seg.reference[t] * e;
        }
        const double u = static_cast<double>(seg.reference.size());
        if (std::abs(x_ref) < 1e-9 * u * std::sqrt(segment_ref_power(seg)) + 1e-300)
            throw SingularChannelError("estimate_harmonic: reference spectral line " +
                                       std::to_string(harmonic) + " vanishes in antenna " +
                                       std::to_string(seg.antenna) + " segment");
        ratios[s] = x_sw * std::conj(x_ref) / std::norm(x_ref);
    }
    return assemble(pkt, ratios, EstimatorKind::standard, 0, carrier_wavelength_m);
}

InterferenceCheck detect_interference(const RelativeChannel& h_off, const RelativeChannel& h_inv,
                                      double threshold) {
    // Kinds are deliberately not compared so that the identity property
    // detect_interference(h, h) == clean holds for any channel.
    if (h_off.values.size() != h_inv.values.size())
        throw ProvenanceError("detect_interference: channel lengths differ: " +
                              std::to_string(h_off.values.size()) + " vs " +
                              std::to_string(h_inv.values.size()));
    if (h_off.tau_samples != h_inv.tau_samples)
        throw ProvenanceError("detect_interference: tau differs: " +
                              std::to_string(h_off.tau_samples) + " vs " +
                              std::to_string(h_inv.tau_samples));
    if (h_off.carrier_wavelength_m != h_inv.carrier_wavelength_m)
        throw ProvenanceError("detect_interference: wavelength differs");
    if (!(threshold >= 0.0))
        throw ValidationError("detect_interference: threshold must be nonnegative");

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < h_off.values.size(); ++i) {
        num += std::norm(h_off.values[i] - h_inv.values[i]);
        den += std::norm(h_off.values[i]);
    }
    const double score = std::sqrt(num) / std::sqrt(den); // den >= 1: values[0] = 1
    return {score, score > threshold};
}

ClockEstimate detect_clock(std::span<const std::complex<double>> iq, std::size_t min_period,
                           std::size_t max_period, double min_normalized_peak) {
    if (min_period < 2)
        throw ValidationError("detect_clock: min_period must be at least 2");
    if (max_period < min_period)
        throw ValidationError("detect_clock: max_period must be >= min_period");
    if (max_period > iq.size() / 4)
        throw ValidationError("detect_clock: max_period " + std::to_string(max_period) +
                              " exceeds n/4 = " + std::to_string(iq.size() / 4));

    const cvec r = autocorrelation(iq, max_period + 1, true);
    const double r0 = r[0].real();
    if (!(r0 > 0.0))
        throw NoClockFoundError("detect_clock: zero-variance input");

    // The autocorrelation of any periodic wave decays slowly away from lag 0,
    // so for long periods the shoulder next to lag 0 can outgrow the true
    // peak under the biased estimator's taper. Start the scan past the first
    // non-positive lag, which separates the lag-0 lobe from genuine peaks.
    std::size_t start = min_period;
    for (std::size_t k = 1; k <= max_period; ++k) {
        if (r[k].real() <= 0.0) {
            start = std::max(min_period, k + 1);
            break;
        }
    }

    // A half-period lag of a near-50%-duty clock anticorrelates with the same
    // magnitude as the full period, so the scan ranks lags by positive real
    // part (self-similarity) rather than raw magnitude.
    std::size_t best = min_period;
    double best_val = 0.0;
    for (std::size_t k = start; k <= max_period; ++k) {
        const double v = std::max(r[k].real(), 0.0);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    if (best_val / r0 < min_normalized_peak)
        throw NoClockFoundError("detect_clock: best normalized autocorrelation peak " +
                                std::to_string(best_val / r0) + " at lag " +
                                std::to_string(best) + " is below the floor " +
                                std::to_string(min_normalized_peak));

    // Local integer argmax of Re r within +/-hw of a fractional target lag.
    const auto peak_near = [&](double target, std::size_t hw) {
        const auto c = static_cast<std::size_t>(std::llround(target));
        std::size_t lo = std::max<std::size_t>(c > hw ? c - hw : 0, 2);
        std::size_t hi = std::min(c + hw, max_period);
        std::size_t p = lo;
        for (std::size_t k = lo + 1; k <= hi; ++k)
            if (r[k].real() > r[p].real())
                p = k;
        return p;
    };

    // Median of the comb heights at multiples j*d for j = 1..6. A genuine
    // period keeps comparable peaks at every multiple, so the median stays
    // near the global peak; a sine subharmonic or a noise bump on the
    // triangle shoulder collapses within two or three multiples.
    const auto comb_median = [&](double d) {
        std::vector<double> vals;
        for (std::size_t j = 1; j <= 6; ++j) {
            const double target = d * static_cast<double>(j);
            const std::size_t hw = 2 + j / 2;
            if (target + static_cast<double>(hw) > static_cast<double>(max_period))
                break;
            vals.push_back(r[peak_near(target, hw)].real());
        }
        if (vals.empty())
            return -1.0;
        std::sort(vals.begin(), vals.end());
        const std::size_t h = vals.size() / 2;
        return vals.size() % 2 == 1 ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
    };

    // Interference with a frequency offset leaves a lag comb of its own that
    // can add constructively at one multiple of the true period and outgrow
    // the fundamental. Walk the submultiples of the argmax from the smallest
    // up and adopt the first whose whole comb stays comparable to the global
    // peak; anything else (noise bumps, half periods, sine subharmonics)
    // fails the census at some multiple.
    for (std::size_t m = best / start; m >= 2; --m) {
        const double d = static_cast<double>(best) / static_cast<double>(m);
        if (d < static_cast<double>(start))
            continue;
        if (comb_median(d) >= 0.7 * best_val) {
            best = peak_near(d, 2);
            best_val = std::max(r[best].real(), 0.0);
            break;
        }
    }

    // Parabolic vertex around an integer lag, clamped to half a sample.
    const auto refine_at = [&](std::size_t lag) {
        const double ym = r[lag - 1].real();
        const double y0 = r[lag].real();
        const double yp = r[lag + 1].real();
        const double denom = ym - 2.0 * y0 + yp;
        double delta = 0.0;
        if (denom < -1e-300 * std::max(1.0, std::abs(y0)))
            delta = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
        return static_cast<double>(lag) + delta;
    };

    const auto avg_median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };

    // Every multiple of the period carries a copy of the peak with noise of
    // its own; dividing each refined position by its multiple and taking the
    // median averages down both the noise and the piecewise-linear fit bias,
    // and shrugs off a multiple whose local argmax interference stole. The
    // running median re-anchors each window so an off-by-one argmax cannot
    // drift the far multiples out of reach.
    double period = refine_at(best);
    std::vector<double> votes{period};
    for (std::size_t j = 2; j <= 16 && votes.size() < 6; ++j) {
        const double target = period * static_cast<double>(j);
        const std::size_t hw = 3;
        if (target + static_cast<double>(hw) > static_cast<double>(max_period))
            break;
        const std::size_t p = peak_near(target, hw);
        if (r[p].real() > 0.0) {
            votes.push_back(refine_at(p) / static_cast<double>(j));
            period = avg_median(votes);
        }
    }

    std::vector<double> floor_mags;
    floor_mags.reserve(max_period - min_period + 1);
    for (std::size_t k = min_period; k <= max_period; ++k) {
        if (k + 2 >= best && k <= best + 2)
            continue;
        floor_mags.push_back(std::abs(r[k]));
    }
    const double floor = std::max(median_of(std::move(floor_mags)), 1e-300);

    ClockEstimate est;
    est.period_samples = period;
    est.confidence_db = 20.0 * std::log10(best_val / floor);
    return est;
}

RelativeChannel average_channels(std::span<const RelativeChannel> channels) {
    if (channels.empty())
        throw ValidationError("average_channels: empty input list");
    const RelativeChannel& first = channels[0];
    RelativeChannel out;
    out.values.assign(first.values.size(), std::complex<double>(0.0, 0.0));
    out.estimator_kind = first.estimator_kind;
    out.tau_samples = first.tau_samples;
    out.carrier_wavelength_m = first.carrier_wavelength_m;
    out.n_packets_averaged = 0;

    for (const RelativeChannel& h : channels) {
        if (h.values.size() != first.values.size() || h.estimator_kind != first.estimator_kind ||
            h.tau_samples != first.tau_samples ||
            h.carrier_wavelength_m != first.carrier_wavelength_m)
            throw ProvenanceError(
                "average_channels: inputs must share estimator kind, tau, wavelength and length");
        for (std::size_t i = 0; i < h.values.size(); ++i)
            out.values[i] += h.values[i];
        out.n_packets_averaged += h.n_packets_averaged;
    }
    const double inv = 1.0 / static_cast<double>(channels.size());
    for (auto& v : out.values)
        v *= inv;
    out.values[0] = std::complex<double>(1.0, 0.0); // exact despite rounding
    return out;
}

cvec enhance_product(std::span<const std::complex<double>> iq, double tau_samples,
                     std::size_t n_offsets) {
    if (n_offsets == 0)
        throw ValidationError("enhance_product: n_offsets must be at least 1");
    if (tau_samples < 0.0)
        throw ValidationError("enhance_product: tau_samples must be nonnegative");

    std::vector<std::size_t> lags(n_offsets);
    for (std::size_t k = 0; k < n_offsets; ++k)
        lags[k] = static_cast<std::size_t>(
            std::llround(static_cast<double>(k + 1) * tau_samples));
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    if (max_lag >= iq.size())
        throw ValidationError("enhance_product: max lag " + std::to_string(max_lag) +
                              " reaches past the stream of " + std::to_string(iq.size()) +
                              " samples");

    cvec out(iq.size() - max_lag);
    const double inv_k = 1.0 / static_cast<double>(n_offsets);
    for (std::size_t t = max_lag; t < iq.size(); ++t) {
        std::complex<double> acc(0.0, 0.0);
        for (const std::size_t lag : lags)
            acc += iq[t] * std::conj(iq[t - lag]);
        out[t - max_lag] = acc * inv_k;
    }
    return out;
}

double spike_snr(std::span<const std::complex<double>> iq, const ClockEstimate& clock) {
    if (!(clock.period_samples >= 2.0))
        throw ValidationError("spike_snr: clock period must be at least 2 samples");
    if (iq.size() < 16)
        throw ValidationError("spike_snr: needs at least 16 samples");

    cvec buf(iq.size());
    const double wscale = 2.0 * kPi / static_cast<double>(iq.size() - 1);
    for (std::size_t t = 0; t < iq.size(); ++t)
        buf[t] = iq[t] * (0.5 - 0.5 * std::cos(wscale * static_cast<double>(t)));

    const std::vector<double> mag = magnitude_spectrum(buf);
    const std::size_t m = mag.size();
    const std::size_t half = m / 2;
    const double f0 = static_cast<double>(m) / clock.period_samples;

    const std::size_t max_harmonic =
        std::min<std::size_t>(16, static_cast<std::size_t>(clock.period_samples / 2.0));
    std::vector<bool> excluded(half, false);
    for (std::size_t b = 0; b < std::min<std::size_t>(9, half); ++b)
        excluded[b] = true; // DC leakage region

    double peak = 0.0;
    for (std::size_t k = 1; k <= max_harmonic; ++k) {
        const double center = f0 * static_cast<double>(k);
        const long c = std::lround(center);
        if (c + 3 >= static_cast<long>(half))
            break;
        for (long b = c - 2; b <= c + 2; ++b)
            if (b >= 0)
                peak = std::max(peak, mag[static_cast<std::size_t>(b)]);
        for (long b = c - 4; b <= c + 4; ++b)
            if (b >= 0 && b < static_cast<long>(half))
                excluded[static_cast<std::size_t>(b)] = true;
    }

    std::vector<double> floor_bins;
    floor_bins.reserve(half);
    for (std::size_t b = 0; b < half; ++b)
        if (!excluded[b])
            floor_bins.push_back(mag[b]);
    const double floor = std::max(median_of(std::move(floor_bins)), 1e-300);
    return 20.0 * std::log10(std::max(peak, 1e-300) / floor);
}

} // namespace emadir
