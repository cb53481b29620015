// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace emadir {

// Deterministic random source. The mt19937_64 engine is fully specified by
// the C++ standard; the uniform and Gaussian transforms below are written out
// explicitly because std::*_distribution output is implementation defined and
// seeded runs must reproduce bit for bit across compilers.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second deviate of each pair is
    // cached so consecutive calls stay cheap.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> cgaussian() {
        const double s = 0.70710678118654752440; // sqrt(1/2)
        const double re = gaussian();
        const double im = gaussian();
        return {s * re, s * im};
    }

    // splitmix64 mix of a base seed and a stream index; used to derive
    // independent substreams (per antenna, per sweep point, per trial).
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace emadir
