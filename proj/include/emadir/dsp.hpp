// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace emadir {

using cvec = std::vector<std::complex<double>>;

std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 transform. x.size() must be a power of two.
// The inverse transform includes the 1/N factor.
void fft_radix2(cvec& x, bool inverse);

// Forward magnitude spectrum, zero padded to the next power of two.
std::vector<double> magnitude_spectrum(std::span<const std::complex<double>> x);

// Biased sample autocorrelation R[k] = (1/n) sum_t x[t] conj(x[t-k]) for
// k = 0..max_lag, computed with a zero-padded transform. When remove_mean is
// set the sample mean is subtracted first, which suppresses the DC ridge a
// rectified clock otherwise leaves across all lags.
cvec autocorrelation(std::span<const std::complex<double>> x, std::size_t max_lag,
                     bool remove_mean);

// (1/(n-lag)) sum_{t=lag}^{n-1} x[t] conj(y[t-lag]); x and y equal length.
std::complex<double> lag_product(std::span<const std::complex<double>> x,
                                 std::span<const std::complex<double>> y,
                                 std::size_t lag);

} // namespace emadir
