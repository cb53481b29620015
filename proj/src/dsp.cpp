// SPDX-License-Identifier: Apache-2.0
#include "emadir/dsp.hpp"

#include "emadir/errors.hpp"

#include <algorithm>
#include <cmath>

namespace emadir {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

void fft_radix2(cvec& x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ValidationError("fft_radix2: length must be a nonzero power of two, got " +
                              std::to_string(n));

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(x[i], x[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = x[i + k];
                const std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : x)
            v *= inv_n;
    }
}

std::vector<double> magnitude_spectrum(std::span<const std::complex<double>> x) {
    if (x.empty())
        throw ValidationError("magnitude_spectrum: empty input");
    cvec buf(x.begin(), x.end());
    buf.resize(next_pow2(x.size()));
    fft_radix2(buf, false);
    std::vector<double> mag(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
        mag[i] = std::abs(buf[i]);
    return mag;
}

cvec autocorrelation(std::span<const std::complex<double>> x, std::size_t max_lag,
                     bool remove_mean) {
    const std::size_t n = x.size();
    if (n == 0)
        throw ValidationError("autocorrelation: empty input");
    if (max_lag >= n)
        throw ValidationError("autocorrelation: max_lag " + std::to_string(max_lag) +
                              " must be below the sample count " + std::to_string(n));

    std::complex<double> mean(0.0, 0.0);
    if (remove_mean) {
        for (const auto& v : x)
            mean += v;
        mean /= static_cast<double>(n);
    }

    // Zero padding to at least n + max_lag keeps the circular products linear
    // over the requested lag span.
    cvec buf(next_pow2(n + max_lag));
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = x[i] - mean;
    fft_radix2(buf, false);
    for (auto& v : buf)
        v = std::complex<double>(std::norm(v), 0.0);
    fft_radix2(buf, true);

    cvec r(max_lag + 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k <= max_lag; ++k)
        r[k] = buf[k] * inv_n;
    return r;
}

std::complex<double> lag_product(std::span<const std::complex<double>> x,
                                 std::span<const std::complex<double>> y, std::size_t lag) {
    if (x.size() != y.size())
        throw ValidationError("lag_product: length mismatch " + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()));
    if (lag >= x.size())
        throw ValidationError("lag_product: lag " + std::to_string(lag) +
                              " must be below the sample count " + std::to_string(x.size()));
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = lag; t < x.size(); ++t)
        acc += x[t] * std::conj(y[t - lag]);
    return acc / static_cast<double>(x.size() - lag);
}

} // namespace emadir
