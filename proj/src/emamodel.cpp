// SPDX-License-Identifier: Apache-2.0
#include "emadir/emamodel.hpp"

#include "emadir/errors.hpp"
#include "emadir/rng.hpp"

#include <cmath>
#include <string>

namespace emadir {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool finite(const std::complex<double>& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}
} // namespace

void validate(const EmanationSource& src) {
    if (!(src.clock_hz > 0.0))
        throw ValidationError("EmanationSource: clock_hz must be positive, got " +
                              std::to_string(src.clock_hz));
    if (!(src.duty > 0.0) || src.duty > 1.0)
        throw ValidationError("EmanationSource: duty must be in (0, 1], got " +
                              std::to_string(src.duty));
    if (!(src.amplitude >= 0.0) || !std::isfinite(src.amplitude))
        throw ValidationError("EmanationSource: amplitude must be finite and nonnegative");
    if (src.activity_period_s < 0.0)
        throw ValidationError("EmanationSource: activity_period_s must be nonnegative");
    if (!(src.activity_duty > 0.0) || src.activity_duty > 1.0)
        throw ValidationError("EmanationSource: activity_duty must be in (0, 1]");
}

void validate(const ArrayGeometry& geom) {
    if (geom.n_switched == 0)
        throw ValidationError("ArrayGeometry: n_switched must be at least 1");
    if (!(geom.spacing_m > 0.0))
        throw ValidationError("ArrayGeometry: spacing_m must be positive, got " +
                              std::to_string(geom.spacing_m));
    if (!(geom.carrier_wavelength_m > 0.0))
        throw ValidationError("ArrayGeometry: carrier_wavelength_m must be positive, got " +
                              std::to_string(geom.carrier_wavelength_m));
}

void validate(const PathSet& paths) {
    if (paths.paths.empty())
        throw ValidationError("PathSet: at least one path is required");
    for (std::size_t k = 0; k < paths.paths.size(); ++k) {
        const Path& p = paths.paths[k];
        if (!std::isfinite(p.aoa_rad) || std::abs(p.aoa_rad) > kPi / 2.0 + 1e-12)
            throw ValidationError("PathSet: path " + std::to_string(k) +
                                  " aoa_rad must lie in [-pi/2, pi/2]");
        if (!finite(p.gain))
            throw ValidationError("PathSet: path " + std::to_string(k) + " gain must be finite");
    }
}

void validate(const NoiseModel& noise) {
    if (!(noise.power >= 0.0) || !std::isfinite(noise.power))
        throw ValidationError("NoiseModel: power must be finite and nonnegative");
    if (!(noise.rho >= 0.0) || noise.rho > 1.0)
        throw ValidationError("NoiseModel: rho must be in [0, 1], got " +
                              std::to_string(noise.rho));
}

cvec synthesize(const EmanationSource& src, double fs, std::size_t n_samples, double phase0) {
    validate(src);
    if (!(fs > 0.0))
        throw ValidationError("synthesize: fs must be positive, got " + std::to_string(fs));

    const double period = fs / src.clock_hz; // in samples
    const double on_len = src.duty * period;
    const double gate_period = src.activity_period_s * fs;
    const double gate_on = src.activity_duty * gate_period;

    cvec out(n_samples);
    for (std::size_t t = 0; t < n_samples; ++t) {
        double ph = std::fmod(static_cast<double>(t) + phase0 * period, period);
        if (ph < 0.0)
            ph += period;
        double v = (ph < on_len) ? src.amplitude : 0.0;
        if (gate_period > 0.0) {
            const double gp = std::fmod(static_cast<double>(t), gate_period);
            if (gp >= gate_on)
                v = 0.0;
        }
        out[t] = std::complex<double>(v, 0.0);
    }
    return out;
}

std::vector<std::complex<double>> true_relative_channel(const ArrayGeometry& geom,
                                                        const PathSet& paths) {
    validate(geom);
    validate(paths);

    std::complex<double> wsum(0.0, 0.0);
    for (const Path& p : paths.paths)
        wsum += p.gain;
    double scale = 0.0;
    for (const Path& p : paths.paths)
        scale += std::abs(p.gain);
    if (std::abs(wsum) < 1e-12 * std::max(scale, 1e-300))
        throw SingularChannelError(
            "true_relative_channel: path gains cancel at the reference antenna");

    const double dol = geom.d_over_lambda();
    std::vector<std::complex<double>> h(geom.n_switched + 1);
    for (std::size_t i = 0; i <= geom.n_switched; ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (const Path& p : paths.paths) {
            const double phase = -2.0 * kPi * std::sin(p.aoa_rad) * dol * static_cast<double>(i);
            acc += p.gain * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        h[i] = acc / wsum;
    }
    h[0] = std::complex<double>(1.0, 0.0); // exact by construction
    return h;
}

std::vector<cvec> generate_correlated_noise(const NoiseModel& model, std::size_t n_streams,
                                            std::size_t n_samples) {
    validate(model);
    if (n_streams == 0)
        throw ValidationError("generate_correlated_noise: n_streams must be at least 1");

    const double sc = std::sqrt(model.rho);
    const double sp = std::sqrt(1.0 - model.rho);
    const double amp = std::sqrt(model.power);

    Rng common_rng(Rng::derive(model.seed, 0));
    cvec common(n_samples);
    for (auto& v : common)
        v = common_rng.cgaussian();

    std::vector<cvec> streams(n_streams);
    for (std::size_t s = 0; s < n_streams; ++s) {
        Rng rng(Rng::derive(model.seed, s + 1));
        cvec& out = streams[s];
        out.resize(n_samples);
        for (std::size_t t = 0; t < n_samples; ++t)
            out[t] = amp * (sc * common[t] + sp * rng.cgaussian());
    }
    return streams;
}

} // namespace emadir
