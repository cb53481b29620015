// SPDX-License-Identifier: Apache-2.0
//
// Release gate: thirteen numbered end-to-end checks over the whole library,
// one PASS/FAIL line each, nonzero exit when any fails. Check numbers can be
// given on the command line to run a subset, e.g. `acceptance 3 4 7`.
//
// The checks pin down analytic limits (estimator exactness, the
// correlated-noise bias law, triangulation geometry), brute-force
// equivalences (the exhaustive small-support oracle), qualitative trends
// (lag-product SNR lift, packet averaging, the sparsity-weight U-shape,
// joint-solve support gain, baseline ordering) and operational behavior
// (interference classification rates, clock detection under noise,
// byte-identical reruns).

#include "emadir/capture.hpp"
#include "emadir/chanest.hpp"
#include "emadir/emamodel.hpp"
#include "emadir/errors.hpp"
#include "emadir/localize.hpp"
#include "emadir/pipeline.hpp"
#include "emadir/rng.hpp"
#include "emadir/scenario.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

using namespace emadir;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFs = 3.072e6;

struct CheckResult {
    int id = 0;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string text(const char* format, ...) {
    char buf[768];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return std::string(buf);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (const double x : v)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Every solver output produced anywhere in this process is screened for the
// two hard constraints (coefficients sum to one; nothing outside the
// feasible window). Check 6 reports the aggregate.
struct FeasStats {
    double worst_sum_dev = 0.0;
    double worst_off_support = 0.0;
    std::size_t n_outputs = 0;

    void add(const Eigen::VectorXcd& a, std::size_t grid_size, double dol) {
        cd sum(0.0, 0.0);
        double oos = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            sum += a(i);
            const double psi =
                -0.5 + static_cast<double>(i) / static_cast<double>(grid_size);
            if (std::abs(psi) > dol + 1e-12)
                oos = std::max(oos, std::abs(a(i)));
        }
        worst_sum_dev = std::max(worst_sum_dev, std::abs(sum - cd(1.0, 0.0)));
        worst_off_support = std::max(worst_off_support, oos);
        ++n_outputs;
    }
};

FeasStats g_feas;

AoAProfile run_sparse(const Eigen::VectorXcd& p, const WindowMatrix& w, double beta, double dol,
                      const SolveOptions& opts = {}) {
    AoAProfile prof = solve_sparse(p, w, beta, dol, opts);
    g_feas.add(prof.coeffs, prof.grid_size, prof.d_over_lambda);
    return prof;
}

JointProfile run_joint(std::span<const JointMeasurement> ms, double lambda_group,
                       const SolveOptions& opts = {}) {
    JointProfile prof = solve_joint(ms, lambda_group, opts);
    for (Eigen::Index l = 0; l < prof.coeffs.cols(); ++l)
        g_feas.add(prof.coeffs.col(l), prof.grid_size,
                   prof.d_over_lambda[static_cast<std::size_t>(l)]);
    return prof;
}

RelativeChannel make_channel(const ArrayGeometry& geom, const PathSet& paths) {
    RelativeChannel h;
    h.values = true_relative_channel(geom, paths);
    h.estimator_kind = EstimatorKind::offset;
    h.tau_samples = 64;
    h.carrier_wavelength_m = geom.carrier_wavelength_m;
    return h;
}

// h_n = sum_b w_b exp(-j 2 pi n Psi_b) for grid bins b; real weights summing
// to one keep the reference element exactly 1.
RelativeChannel channel_for_bins(std::size_t n_values, std::size_t grid_size,
                                 const std::vector<std::size_t>& bins,
                                 const std::vector<double>& weights) {
    RelativeChannel h;
    h.values.assign(n_values, cd(0.0, 0.0));
    for (std::size_t n = 0; n < n_values; ++n) {
        cd acc(0.0, 0.0);
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const double psi =
                -0.5 + static_cast<double>(bins[b]) / static_cast<double>(grid_size);
            const double ph = -2.0 * kPi * static_cast<double>(n) * psi;
            acc += weights[b] * cd(std::cos(ph), std::sin(ph));
        }
        h.values[n] = acc;
    }
    h.values[0] = cd(1.0, 0.0);
    return h;
}

// Per-element complex noise on the switched elements at the given SNR; the
// reference element stays exactly 1 by convention.
void add_channel_noise(RelativeChannel& h, double snr_db, Rng& rng) {
    double p = 0.0;
    for (std::size_t i = 1; i < h.values.size(); ++i)
        p += std::norm(h.values[i]);
    p /= static_cast<double>(h.values.size() - 1);
    const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
    for (std::size_t i = 1; i < h.values.size(); ++i)
        h.values[i] += sigma * rng.cgaussian();
}

AoAEstimate safe_extract(const AoAProfile& prof) {
    try {
        return extract_angles(prof);
    } catch (const NoPathFoundError&) {
        return AoAEstimate{};
    }
}

double dominant_error_deg(const AoAEstimate& est, const PathSet& truth) {
    if (est.angles_rad.empty())
        return 90.0;
    return aoa_error_deg(est, truth);
}

std::vector<std::size_t> active_bins(const Eigen::VectorXcd& a, double rel = 0.05) {
    double amax = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        amax = std::max(amax, std::abs(a(i)));
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (std::abs(a(i)) > rel * amax)
            out.push_back(static_cast<std::size_t>(i));
    return out;
}

// Exhaustive reference for small problems: constrained least squares on
// every support of size 1 or 2 inside the window, scored with the solver's
// own objective, reported through the same activity threshold.
struct OracleResult {
    std::vector<std::size_t> support;
    Eigen::VectorXcd coeffs;
};

OracleResult two_support_oracle(const Eigen::VectorXcd& p, const WindowMatrix& w, double beta,
                                double dol) {
    std::vector<std::size_t> window;
    for (std::size_t j = 0; j < w.grid_size; ++j) {
        const double psi = -0.5 + static_cast<double>(j) / static_cast<double>(w.grid_size);
        if (std::abs(psi) <= dol + 1e-12)
            window.push_back(j);
    }

    auto solve_support = [&](const std::vector<std::size_t>& sup, Eigen::VectorXcd& c) {
        const Eigen::Index k = static_cast<Eigen::Index>(sup.size());
        Eigen::MatrixXcd a(p.size(), k);
        for (Eigen::Index i = 0; i < k; ++i)
            a.col(i) = w.w.col(static_cast<Eigen::Index>(sup[static_cast<std::size_t>(i)]));
        Eigen::MatrixXcd kkt(k + 1, k + 1);
        kkt.topLeftCorner(k, k) = 2.0 * (a.adjoint() * a);
        kkt.topRightCorner(k, 1).setConstant(cd(1.0, 0.0));
        kkt.bottomLeftCorner(1, k).setConstant(cd(1.0, 0.0));
        kkt(k, k) = cd(0.0, 0.0);
        Eigen::VectorXcd rhs(k + 1);
        rhs.head(k) = 2.0 * (a.adjoint() * p);
        rhs(k) = cd(1.0, 0.0);
        c = kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
        double l1 = 0.0;
        for (Eigen::Index i = 0; i < k; ++i)
            l1 += std::abs(c(i));
        return (p - a * c).squaredNorm() + beta * l1;
    };

    OracleResult best;
    double best_f = std::numeric_limits<double>::infinity();
    Eigen::VectorXcd c;
    for (std::size_t i = 0; i < window.size(); ++i) {
        for (std::size_t j = i; j < window.size(); ++j) {
            std::vector<std::size_t> sup;
            sup.push_back(window[i]);
            if (j != i)
                sup.push_back(window[j]);
            const double f = solve_support(sup, c);
            if (f < best_f - 1e-12) {
                best_f = f;
                best.support = sup;
                best.coeffs = Eigen::VectorXcd::Zero(p.size());
                for (std::size_t k2 = 0; k2 < sup.size(); ++k2)
                    best.coeffs(static_cast<Eigen::Index>(sup[k2])) =
                        c(static_cast<Eigen::Index>(k2));
            }
        }
    }
    best.support = active_bins(best.coeffs);
    return best;
}

// ---------------------------------------------------------------------------
// 1. Noiseless captures: all three estimators reproduce the analytic
//    relative channel to machine-level accuracy over random path sets.
CheckResult check_01() {
    const auto t0 = Clock::now();
    EmanationSource src;
    src.clock_hz = 48000.0; // 64-sample period at 3.072 MS/s
    ArrayGeometry geom;
    SwitchSchedule sched;
    sched.dwell_samples = 4096;
    sched.guard_samples = 128;
    NoiseModel quiet;
    quiet.power = 0.0;
    Rng rng(101);

    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        PathSet ps;
        const int m = 1 + t % 3;
        for (int k = 0; k < m; ++k) {
            Path p;
            p.aoa_rad = (rng.uniform() * 150.0 - 75.0) * kPi / 180.0;
            // positive real parts keep the gain sum away from cancellation
            p.gain = cd(0.3 + 0.7 * rng.uniform(), 0.6 * (rng.uniform() - 0.5));
            ps.paths.push_back(p);
        }
        const std::vector<cd> h = true_relative_channel(geom, ps);
        const IQCapture cap = simulate_capture(src, geom, ps, quiet, sched, kFs, 2);
        const std::vector<Packet> pkts = packetize(cap);
        for (int kind = 0; kind < 3; ++kind) {
            std::vector<RelativeChannel> per;
            per.reserve(pkts.size());
            for (const Packet& pkt : pkts)
                per.push_back(kind == 0   ? estimate_standard(pkt)
                              : kind == 1 ? estimate_offset(pkt, 64)
                                          : estimate_inverse(pkt, 64));
            const RelativeChannel hb = average_channels(per);
            double num = 0.0;
            double den = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                num += std::norm(hb.values[i] - h[i]);
                den += std::norm(h[i]);
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 1;
    r.pass = worst <= 1e-9 && dt < 10.0;
    r.detail = text("noiseless capture, 100 random path sets, 3 estimators: "
                    "worst relative error %.2e (limit 1e-9)",
                    worst);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 2. Correlated noise biases the plain correlation estimator toward
//    (Ps*h + rho*Pn)/(Ps + Pn) = 0.9 for h = 1 at 0 dB and rho = 0.8; a
//    period-multiple lag restores an (almost) unbiased estimate.
CheckResult check_02() {
    const auto t0 = Clock::now();
    EmanationSource src;
    src.clock_hz = 48000.0; // raw square power = duty * amp^2 = 0.5
    ArrayGeometry geom;
    geom.n_switched = 2;
    PathSet ps;
    ps.paths.emplace_back(); // broadside unity path: h = 1 on every element
    SwitchSchedule sched;
    sched.n_antennas = 2;
    sched.dwell_samples = 100064;
    sched.guard_samples = 64; // estimators see exactly 1e5 samples per dwell
    sched.order = {0, 1};
    NoiseModel noise;
    noise.power = 0.5; // SNR 0 dB against the square's raw power
    noise.rho = 0.8;

    cd sum_std(0.0, 0.0);
    cd sum_off(0.0, 0.0);
    int n_vals = 0;
    for (int t = 0; t < 200; ++t) {
        noise.seed = Rng::derive(202, static_cast<std::uint64_t>(t));
        const IQCapture cap = simulate_capture(src, geom, ps, noise, sched, kFs, 1);
        const Packet pkt = packetize(cap).front();
        const RelativeChannel hs = estimate_standard(pkt);
        const RelativeChannel ho = estimate_offset(pkt, 64);
        for (std::size_t i = 1; i < hs.values.size(); ++i) {
            sum_std += hs.values[i];
            sum_off += ho.values[i];
            ++n_vals;
        }
    }
    const cd mean_std = sum_std / static_cast<double>(n_vals);
    const cd mean_off = sum_off / static_cast<double>(n_vals);
    const double dev = std::abs(mean_std - cd(0.9, 0.0));
    const double bias_std = std::abs(mean_std - cd(1.0, 0.0));
    const double bias_off = std::abs(mean_off - cd(1.0, 0.0));

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 2;
    r.pass = dev <= 0.05 * 0.9 && bias_off < 0.2 * bias_std && dt < 120.0;
    r.detail = text("plain estimator mean %.4f%+.4fj vs analytic 0.9; "
                    "lag-offset bias %.4f vs plain bias %.4f (need < 20%%)",
                    mean_std.real(), mean_std.imag(), bias_off, bias_std);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 3. Lag-product enhancement: evaluating the product at a period multiple
//    instead of lag 0 lifts the spectral spike SNR by at least 10 dB at
//    every simulated range of a 1/r-attenuated source.
CheckResult check_03() {
    const auto t0 = Clock::now();
    const double ranges[] = {0.5, 0.75, 1.0, 1.5};
    const std::size_t n = std::size_t{1} << 19;
    const double base_amp = 0.12; // weak emanation: SNR well below 0 dB everywhere
    const std::size_t n_offsets = 64;

    double min_gain = std::numeric_limits<double>::infinity();
    std::string per;
    ClockEstimate ck;
    ck.period_samples = 64.0;
    for (std::size_t ri = 0; ri < 4; ++ri) {
        EmanationSource src;
        src.clock_hz = 48000.0;
        src.amplitude = base_amp / ranges[ri];
        const cvec wave = synthesize(src, kFs, n);
        double gain_sum = 0.0;
        for (int s = 0; s < 5; ++s) {
            Rng rng(Rng::derive(303, static_cast<std::uint64_t>(ri) * 16 +
                                         static_cast<std::uint64_t>(s)));
            cvec x = wave;
            const double sn = std::sqrt(0.5);
            for (auto& v : x)
                v += sn * rng.cgaussian();
            const double snr0 = spike_snr(enhance_product(x, 0.0, n_offsets), ck);
            const double snrp = spike_snr(enhance_product(x, 64.0, n_offsets), ck);
            gain_sum += snrp - snr0;
        }
        const double gain = gain_sum / 5.0;
        min_gain = std::min(min_gain, gain);
        per += text("%s%.2fm:%.1fdB", per.empty() ? "" : " ", ranges[ri], gain);
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 3;
    r.pass = min_gain >= 10.0 && dt < 120.0;
    r.detail = text("lag-product SNR gain per range [%s], min %.1f dB (need >= 10)",
                    per.c_str(), min_gain);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 4. Interference classification at threshold 0.1: clean captures stay
//    below, offset-interfered captures rise above, each at least 95% of the
//    time over 200 seeded trials.
CheckResult check_04() {
    const auto t0 = Clock::now();
    EmanationSource src;
    src.clock_hz = 48000.0;
    ArrayGeometry geom;
    PathSet ps;
    Path direct;
    direct.aoa_rad = -10.0 * kPi / 180.0;
    ps.paths.push_back(direct);
    SwitchSchedule sched;
    sched.dwell_samples = 4096;
    sched.guard_samples = 128;
    NoiseModel noise;
    noise.power = 0.1;
    noise.rho = 0.8;

    const auto score_of = [](const IQCapture& cap) {
        const std::vector<Packet> pkts = packetize(cap);
        std::vector<RelativeChannel> offs;
        std::vector<RelativeChannel> invs;
        for (const Packet& pkt : pkts) {
            offs.push_back(estimate_offset(pkt, 64));
            invs.push_back(estimate_inverse(pkt, 64));
        }
        return detect_interference(average_channels(offs), average_channels(invs)).score;
    };

    int clean_ok = 0;
    for (int t = 0; t < 200; ++t) {
        noise.seed = Rng::derive(405, static_cast<std::uint64_t>(t));
        const IQCapture cap = simulate_capture(src, geom, ps, noise, sched, kFs, 2);
        if (score_of(cap) <= 0.1)
            ++clean_ok;
    }

    PathSet ipath;
    Path ip;
    ip.aoa_rad = 25.0 * kPi / 180.0;
    ipath.paths.push_back(ip);
    const std::vector<cd> ih = true_relative_channel(geom, ipath);
    Rng par(404);
    int intf_ok = 0;
    for (int t = 0; t < 200; ++t) {
        noise.seed = Rng::derive(406, static_cast<std::uint64_t>(t));
        InterferenceSource intf;
        intf.source.clock_hz = 51200.0; // 60-sample period, distinct from the target
        intf.source.amplitude = 0.3 + 0.3 * par.uniform();
        intf.alpha.assign(ih.begin() + 1, ih.end());
        intf.baseband_offset_hz = 12000.0; // quarter turn per 64-sample lag
        intf.phase0 = par.uniform();
        const IQCapture cap = simulate_capture(src, geom, ps, noise, sched, kFs, 2,
                                               std::span<const InterferenceSource>(&intf, 1));
        if (score_of(cap) > 0.1)
            ++intf_ok;
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 4;
    r.pass = clean_ok >= 190 && intf_ok >= 190;
    r.detail = text("clean classified clean %d/200, interfered classified interfered "
                    "%d/200 (need >= 190 each)",
                    clean_ok, intf_ok);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 5. Sparse solver vs the exhaustive small-support oracle: identical
//    effective support in 100/100 noiseless on-grid cases, matched
//    coefficients within 5%.
CheckResult check_05() {
    const auto t0 = Clock::now();
    const WindowMatrix w = build_window_matrix(9, 64);
    const double dol = 0.1;
    std::vector<std::size_t> window;
    for (std::size_t j = 0; j < w.grid_size; ++j) {
        const double psi = -0.5 + static_cast<double>(j) / 64.0;
        if (std::abs(psi) <= dol + 1e-12)
            window.push_back(j);
    }

    Rng rng(505);
    int ok = 0;
    double worst_weight_dev = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<std::size_t> bins;
        std::vector<double> weights;
        bins.push_back(window[static_cast<std::size_t>(rng.uniform() *
                                                       static_cast<double>(window.size()))]);
        if (t % 2 == 1) {
            std::size_t b2 = bins[0];
            while (std::max(b2, bins[0]) - std::min(b2, bins[0]) < 3)
                b2 = window[static_cast<std::size_t>(rng.uniform() *
                                                     static_cast<double>(window.size()))];
            bins.push_back(b2);
            const double u = 0.3 + 0.4 * rng.uniform();
            weights = {u, 1.0 - u};
        } else {
            weights = {1.0};
        }

        Eigen::VectorXcd p = Eigen::VectorXcd::Zero(64);
        for (std::size_t b = 0; b < bins.size(); ++b)
            p += weights[b] * w.w.col(static_cast<Eigen::Index>(bins[b]));

        const AoAProfile prof = run_sparse(p, w, 1.0, dol);
        const OracleResult orc = two_support_oracle(p, w, 1.0, dol);
        const std::vector<std::size_t> got = active_bins(prof.coeffs);

        bool match = got == orc.support;
        if (match) {
            for (const std::size_t b : got) {
                const double dev =
                    std::abs(prof.coeffs(static_cast<Eigen::Index>(b)) -
                             orc.coeffs(static_cast<Eigen::Index>(b))) /
                    std::abs(orc.coeffs(static_cast<Eigen::Index>(b)));
                worst_weight_dev = std::max(worst_weight_dev, dev);
                if (dev > 0.05)
                    match = false;
            }
        }
        if (match)
            ++ok;
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 5;
    r.pass = ok == 100;
    r.detail = text("support + coefficients match exhaustive oracle %d/100 "
                    "(worst coefficient deviation %.2e, cap 0.05)",
                    ok, worst_weight_dev);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// Shared two-path benchmark: 20 degree separation, 9 antennas, half-wavelength
// class aperture (0.35 lambda element spacing), 50 seeds. Used by checks 7, 9
// and 10's geometry. Two noise regimes are prepared:
//   - capture_channels: full capture simulation at 10 dB per-element sample
//     SNR, channel estimated through the standard per-packet pipeline. The
//     residual channel error is small, so method differences are dominated by
//     how each handles the coherent two-path sum (check 7).
//   - noisy_channels: complex white noise added directly to the exact channel
//     at 10 dB, the regime where the sparsity weight actually matters
//     (check 9).
constexpr double kBenchDol = 0.35;

struct TwoPathData {
    ArrayGeometry geom;
    PathSet truth;
    std::vector<RelativeChannel> capture_channels;
    std::vector<RelativeChannel> noisy_channels;
};

const TwoPathData& two_path_data() {
    static const TwoPathData data = [] {
        TwoPathData d;
        d.geom.spacing_m = kBenchDol * d.geom.carrier_wavelength_m;
        Path dom;
        dom.aoa_rad = -3.1 * kPi / 180.0;
        dom.gain = cd(1.0, 0.0);
        Path sec;
        sec.aoa_rad = 16.9 * kPi / 180.0;
        sec.gain = 0.70 * cd(std::cos(0.8), std::sin(0.8));
        d.truth.paths = {dom, sec};

        EmanationSource src;
        src.clock_hz = 48000.0;
        src.amplitude = 1.0; // duty 0.5 -> raw signal power 0.5 at the reference
        SwitchSchedule sched;
        sched.dwell_samples = 4096;
        sched.guard_samples = 128;
        NoiseModel noise;
        noise.power = 0.05; // 10 dB per-element SNR in the raw capture
        noise.rho = 0.0;

        const RelativeChannel base = make_channel(d.geom, d.truth);
        for (int s = 0; s < 50; ++s) {
            noise.seed = Rng::derive(707, static_cast<std::uint64_t>(s));
            const IQCapture cap =
                simulate_capture(src, d.geom, d.truth, noise, sched, kFs, 2);
            std::vector<RelativeChannel> ests;
            for (const Packet& pkt : packetize(cap))
                ests.push_back(estimate_standard(pkt));
            d.capture_channels.push_back(average_channels(ests));

            Rng rng(Rng::derive(707, static_cast<std::uint64_t>(s)));
            RelativeChannel h = base;
            add_channel_noise(h, 10.0, rng);
            d.noisy_channels.push_back(h);
        }
        return d;
    }();
    return data;
}

// ---------------------------------------------------------------------------
// 7. Resolution ordering on the two-path benchmark: the sparse solver's
//    dominant-path error is strictly the lowest of the three methods in at
//    least 90% of seeds, and single-snapshot rank-1 MUSIC fails to resolve
//    the pair in at least 80%.
CheckResult check_07() {
    const auto t0 = Clock::now();
    const TwoPathData& d = two_path_data();
    const WindowMatrix w = build_window_matrix(9, 256);

    int sparse_wins = 0;
    int music_unresolved = 0;
    std::vector<double> es, em, ep;
    for (const RelativeChannel& h : d.capture_channels) {
        const AoAProfile prof = run_sparse(ifft_profile(h, 256), w, 1.0, kBenchDol);
        const double e_sparse = dominant_error_deg(safe_extract(prof), d.truth);
        // model order auto-selected: the single coherent snapshot is rank one,
        // so the subspace methods see one source
        const AoAEstimate music = music_aoa(h, kBenchDol, 0);
        const AoAEstimate spot = spotfi_aoa(h, kBenchDol, 5, 0);
        const double e_music = dominant_error_deg(music, d.truth);
        const double e_spot = dominant_error_deg(spot, d.truth);
        es.push_back(e_sparse);
        em.push_back(e_music);
        ep.push_back(e_spot);
        if (e_sparse < e_music && e_sparse < e_spot)
            ++sparse_wins;

        // resolved = one estimate within 10 degrees of each true path
        bool resolved = music.angles_rad.size() >= 2;
        for (const Path& p : d.truth.paths) {
            bool near = false;
            for (const double a : music.angles_rad)
                near = near || std::abs(a - p.aoa_rad) * 180.0 / kPi < 10.0;
            resolved = resolved && near;
        }
        if (!resolved)
            ++music_unresolved;
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 7;
    r.pass = sparse_wins >= 45 && music_unresolved >= 40;
    r.detail = text("sparse lowest error in %d/50 seeds (mean %.2f vs music %.2f, "
                    "smoothed subspace %.2f deg); rank-1 music unresolved %d/50",
                    sparse_wins, mean_of(es), mean_of(em), mean_of(ep), music_unresolved);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 8. Joint solving across 5 measurements at SNR 5 dB recovers the true
//    two-bin support at least 10 percentage points more often than solving
//    each measurement independently.
CheckResult check_08() {
    const auto t0 = Clock::now();
    const WindowMatrix w = build_window_matrix(9, 64);
    const std::vector<std::size_t> true_bins = {29, 35};
    const RelativeChannel base = channel_for_bins(9, 64, true_bins, {0.6, 0.4});
    const std::size_t n_meas = 5;

    // Under noise the recovered mass can split across a bin boundary, so the
    // support is judged by clusters: runs of adjacent active bins reduced to
    // magnitude-weighted centroids. Recovery = exactly two clusters whose
    // centroids land within one bin of the two distinct true bins.
    const auto centroids_of = [](const Eigen::VectorXd& mag) {
        const double mx = mag.maxCoeff();
        std::vector<double> cents;
        double wsum = 0.0, msum = 0.0;
        bool in_run = false;
        for (Eigen::Index i = 0; i <= mag.size(); ++i) {
            const bool active = i < mag.size() && mag(i) > 0.05 * mx;
            if (active) {
                wsum += mag(i) * static_cast<double>(i);
                msum += mag(i);
                in_run = true;
            } else if (in_run) {
                cents.push_back(wsum / msum);
                wsum = msum = 0.0;
                in_run = false;
            }
        }
        return cents;
    };
    const auto matches = [&](const std::vector<double>& cents) {
        if (cents.size() != 2)
            return false;
        const double b0 = static_cast<double>(true_bins[0]);
        const double b1 = static_cast<double>(true_bins[1]);
        return (std::abs(cents[0] - b0) <= 1.0 && std::abs(cents[1] - b1) <= 1.0) ||
               (std::abs(cents[0] - b1) <= 1.0 && std::abs(cents[1] - b0) <= 1.0);
    };

    int joint_hits = 0;
    int indep_hits = 0;
    for (int s = 0; s < 100; ++s) {
        std::vector<Eigen::VectorXcd> profiles;
        for (std::size_t l = 0; l < n_meas; ++l) {
            Rng rng(Rng::derive(808, static_cast<std::uint64_t>(s) * 8 + l));
            RelativeChannel h = base;
            add_channel_noise(h, 5.0, rng);
            profiles.push_back(ifft_profile(h, 64));
        }

        std::vector<JointMeasurement> ms;
        for (const Eigen::VectorXcd& p : profiles) {
            const AoAProfile prof = run_sparse(p, w, 1.0, 0.1);
            if (matches(centroids_of(prof.coeffs.cwiseAbs())))
                ++indep_hits;
            JointMeasurement m;
            m.profile = p;
            m.window = &w;
            m.d_over_lambda = 0.1;
            ms.push_back(m);
        }

        const JointProfile jp = run_joint(ms, 2.6);
        Eigen::VectorXd row_norms(jp.coeffs.rows());
        for (Eigen::Index i = 0; i < jp.coeffs.rows(); ++i)
            row_norms(i) = jp.coeffs.row(i).norm();
        if (matches(centroids_of(row_norms)))
            ++joint_hits;
    }

    const double rate_joint = joint_hits / 100.0;
    const double rate_indep = indep_hits / 500.0;
    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 8;
    r.pass = rate_joint >= rate_indep + 0.10;
    r.detail = text("two-bin support recovery: joint %.0f%% vs independent %.0f%% "
                    "(need >= 10 point gain)",
                    100.0 * rate_joint, 100.0 * rate_indep);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 9. Sparsity-weight sweep on the two-path benchmark: both a much weaker
//    and a much stronger weight than 1 strictly increase the mean
//    dominant-path error.
CheckResult check_09() {
    const auto t0 = Clock::now();
    const TwoPathData& d = two_path_data();
    const WindowMatrix w = build_window_matrix(9, 256);
    SolveOptions opts;
    opts.max_iters = 4000; // identical budget across weights

    const double betas[] = {0.005, 1.0, 5.0};
    double means[3] = {0.0, 0.0, 0.0};
    for (int bi = 0; bi < 3; ++bi) {
        std::vector<double> errs;
        for (const RelativeChannel& h : d.noisy_channels) {
            const AoAProfile prof =
                run_sparse(ifft_profile(h, 256), w, betas[bi], kBenchDol, opts);
            errs.push_back(dominant_error_deg(safe_extract(prof), d.truth));
        }
        means[bi] = mean_of(errs);
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 9;
    r.pass = means[0] > means[1] && means[2] > means[1];
    r.detail = text("mean dominant-path error: weight 0.005 -> %.2f, 1 -> %.2f, "
                    "5 -> %.2f deg (middle must be lowest)",
                    means[0], means[1], means[2]);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 10. Packet averaging: averaging 100 sweeps instead of 10 lowers the mean
//     AoA error and shrinks its spread to at most 0.7x.
CheckResult check_10() {
    const auto t0 = Clock::now();
    EmanationSource src;
    src.clock_hz = 48000.0;
    ArrayGeometry geom;
    PathSet ps;
    Path direct;
    direct.aoa_rad = 9.5 * kPi / 180.0;
    ps.paths.push_back(direct);
    SwitchSchedule sched;
    sched.dwell_samples = 512;
    sched.guard_samples = 16;
    NoiseModel noise;
    noise.power = 0.5;
    noise.rho = 0.8;
    const WindowMatrix w = build_window_matrix(9, 256);

    std::vector<double> e10, e100;
    for (int s = 0; s < 50; ++s) {
        noise.seed = Rng::derive(1010, static_cast<std::uint64_t>(s));
        const IQCapture cap = simulate_capture(src, geom, ps, noise, sched, kFs, 100);
        const std::vector<Packet> pkts = packetize(cap);
        std::vector<RelativeChannel> hs;
        hs.reserve(pkts.size());
        for (const Packet& pkt : pkts)
            hs.push_back(estimate_offset(pkt, 64));

        const auto err_for = [&](std::size_t count) {
            const RelativeChannel hb =
                average_channels(std::span<const RelativeChannel>(hs.data(), count));
            const AoAProfile prof = run_sparse(ifft_profile(hb, 256), w, 1.0, 0.1);
            return dominant_error_deg(safe_extract(prof), ps);
        };
        e10.push_back(err_for(10));
        e100.push_back(err_for(100));
    }

    const double m10 = mean_of(e10);
    const double m100 = mean_of(e100);
    const double s10 = stddev_of(e10);
    const double s100 = stddev_of(e100);
    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 10;
    r.pass = m100 < m10 && s100 <= 0.7 * s10;
    r.detail = text("AoA error 10 packets %.2f+-%.2f deg, 100 packets %.2f+-%.2f deg "
                    "(mean must drop, spread must shrink to <= 0.7x)",
                    m10, s10, m100, s100);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 11. Triangulation: exact bearings localize to within 1e-6 m; with
//     6.3-degree angular noise over a 5 m x 5 m five-vantage layout the
//     median error over 500 trials stays under 0.6 m.
CheckResult check_11() {
    const auto t0 = Clock::now();
    const std::array<std::array<double, 2>, 5> vantages = {
        {{0.0, 0.0}, {5.0, 0.0}, {5.0, 5.0}, {0.0, 5.0}, {2.5, 0.0}}};

    const auto bearings_to = [&](double tx, double ty, double noise_rad, Rng* rng) {
        std::vector<Bearing> bs;
        for (const auto& v : vantages) {
            Bearing b;
            b.origin_m = v;
            b.global_angle_rad = std::atan2(ty - v[1], tx - v[0]);
            if (rng != nullptr)
                b.global_angle_rad += noise_rad * rng->gaussian();
            bs.push_back(b);
        }
        return bs;
    };

    const LocalizationResult exact = triangulate(bearings_to(3.2, 2.7, 0.0, nullptr));
    const double exact_err = localization_error_m(exact, {3.2, 2.7});

    Rng rng(1111);
    const double noise_rad = 6.3 * kPi / 180.0;
    std::vector<double> errs;
    for (int t = 0; t < 500; ++t) {
        const double tx = 1.0 + 3.0 * rng.uniform();
        const double ty = 1.0 + 3.0 * rng.uniform();
        const LocalizationResult res = triangulate(bearings_to(tx, ty, noise_rad, &rng));
        errs.push_back(localization_error_m(res, {tx, ty}));
    }
    const double med = median_of(errs);

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 11;
    r.pass = exact_err <= 1e-6 && med < 0.6 && dt < 60.0;
    r.detail = text("exact-bearing error %.2e m (cap 1e-6); median under 6.3 deg "
                    "noise %.2f m over 500 trials (cap 0.6)",
                    exact_err, med);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 12. Clock detection: a 3 kHz square wave at 3.072 MS/s is recovered to
//     within 1.5 Hz at SNR 0 dB and above; pure noise never yields a clock.
CheckResult check_12() {
    const auto t0 = Clock::now();
    const std::size_t n = std::size_t{1} << 19;
    EmanationSource src;
    src.clock_hz = 3000.0;
    const cvec wave = synthesize(src, kFs, n);

    double worst_hz = 0.0;
    const double powers[] = {0.5, 0.05}; // SNR 0 dB and 10 dB vs raw power 0.5
    for (int pi = 0; pi < 2; ++pi) {
        const double sn = std::sqrt(powers[pi]);
        const int seeds = pi == 0 ? 20 : 10;
        for (int s = 0; s < seeds; ++s) {
            Rng rng(Rng::derive(1212, static_cast<std::uint64_t>(pi) * 64 +
                                          static_cast<std::uint64_t>(s)));
            cvec x = wave;
            for (auto& v : x)
                v += sn * rng.cgaussian();
            const ClockEstimate c = detect_clock(x, 2, 8192);
            worst_hz = std::max(worst_hz, std::abs(kFs / c.period_samples - 3000.0));
        }
    }

    int refused = 0;
    for (int t = 0; t < 100; ++t) {
        Rng rng(Rng::derive(1313, static_cast<std::uint64_t>(t)));
        cvec x(65536);
        const double sn = std::sqrt(0.5);
        for (auto& v : x)
            v = sn * rng.cgaussian();
        try {
            (void)detect_clock(x, 2, 8192);
        } catch (const NoClockFoundError&) {
            ++refused;
        }
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 12;
    r.pass = worst_hz <= 1.5 && refused == 100;
    r.detail = text("worst clock error %.3f Hz over 30 noisy trials (cap 1.5); "
                    "noise-only refused %d/100",
                    worst_hz, refused);
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 13. Rerunning an identical scenario and seed writes byte-identical CSV
//     reports, including the interference retry path.
CheckResult check_13() {
    const auto t0 = Clock::now();
    Scenario sc;
    sc.source.clock_hz = 48000.0;
    sc.source.position_m = {2.0, 3.0};
    sc.dwell_samples = 4096;
    sc.guard_samples = 128;
    VantageConfig v1;
    v1.position_m = {0.0, 0.0};
    v1.heading_deg = std::atan2(3.0, 2.0) * 180.0 / kPi;
    VantageConfig v2;
    v2.position_m = {5.0, 0.0};
    v2.heading_deg = 135.0;
    sc.vantages = {v1, v2};
    sc.noise.power = 0.05;
    sc.noise.rho = 0.8;
    InterfererConfig ic;
    ic.source.clock_hz = 51200.0;
    ic.source.amplitude = 0.4;
    ic.source.position_m = {4.0, 0.5};
    ic.source.activity_period_s = 0.08; // transient: retries eventually win
    ic.source.activity_duty = 0.2;
    ic.baseband_offset_hz = 12000.0;
    ic.phase0 = 0.25;
    sc.interferers = {ic};
    sc.n_packets = 1;
    sc.retries = 5;
    sc.n_sweeps = 6;
    sc.seed = 7;

    namespace fs = std::filesystem;
    const fs::path base =
        fs::temp_directory_path() / ("emadir_accept_" + std::to_string(::getpid()));
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool identical = true;
    std::string status;
    for (const char* name : {"vantages.csv", "localization.csv"}) {
        std::string bytes[2];
        for (int run = 0; run < 2; ++run) {
            const Report rep = run_scenario(sc);
            const fs::path dir = base / (std::string("r") + std::to_string(run));
            write_report(rep, dir.string());
            bytes[run] = slurp(dir / name);
            if (run == 0)
                status = std::to_string(static_cast<int>(rep.status));
        }
        identical = identical && !bytes[0].empty() && bytes[0] == bytes[1];
    }
    fs::remove_all(base);

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 13;
    r.pass = identical;
    r.detail = text("two runs, both report files byte-identical: %s (status %s)",
                    identical ? "yes" : "no", status.c_str());
    r.seconds = dt;
    return r;
}

// ---------------------------------------------------------------------------
// 6. Constraint feasibility, aggregated over every solver output the other
//    checks produced plus a randomized batch of its own: coefficient sums
//    within 1e-6 of one and no mass outside the feasible window.
CheckResult check_06() {
    const auto t0 = Clock::now();
    ArrayGeometry geom;
    Rng rng(606);
    for (int t = 0; t < 40; ++t) {
        const std::size_t grid = (t % 2 == 0) ? 64 : 256;
        const WindowMatrix w = build_window_matrix(9, grid);
        PathSet ps;
        const int m = 1 + t % 3;
        for (int k = 0; k < m; ++k) {
            Path p;
            p.aoa_rad = (rng.uniform() * 120.0 - 60.0) * kPi / 180.0;
            p.gain = cd(0.4 + 0.6 * rng.uniform(), 0.4 * (rng.uniform() - 0.5));
            ps.paths.push_back(p);
        }
        RelativeChannel h = make_channel(geom, ps);
        if (t % 4 != 0)
            add_channel_noise(h, (t % 4 == 1) ? 20.0 : 5.0, rng);
        const double beta = (t % 3 == 0) ? 0.3 : (t % 3 == 1) ? 1.0 : 3.0;
        (void)run_sparse(ifft_profile(h, grid), w, beta, 0.1);
    }

    const WindowMatrix w64 = build_window_matrix(9, 64);
    for (int t = 0; t < 10; ++t) {
        std::vector<JointMeasurement> ms;
        std::vector<Eigen::VectorXcd> keep;
        RelativeChannel base = channel_for_bins(9, 64, {28, 34}, {0.5, 0.5});
        for (int l = 0; l < 3; ++l) {
            RelativeChannel h = base;
            add_channel_noise(h, 8.0, rng);
            keep.push_back(ifft_profile(h, 64));
        }
        for (const Eigen::VectorXcd& p : keep) {
            JointMeasurement m;
            m.profile = p;
            m.window = &w64;
            m.d_over_lambda = 0.1;
            ms.push_back(m);
        }
        (void)run_joint(ms, 1.5);
    }

    const double dt = seconds_since(t0);
    CheckResult r;
    r.id = 6;
    r.pass = g_feas.worst_sum_dev <= 1e-6 && g_feas.worst_off_support <= 1e-6 &&
             g_feas.n_outputs > 0;
    r.detail = text("%zu solver outputs: worst |sum-1| %.2e, worst out-of-window "
                    "mass %.2e (caps 1e-6)",
                    g_feas.n_outputs, g_feas.worst_sum_dev, g_feas.worst_off_support);
    r.seconds = dt;
    return r;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (id < 1 || id > 13) {
            std::fprintf(stderr, "usage: %s [check-number ...]  (numbers 1..13)\n", argv[0]);
            return 2;
        }
        wanted.push_back(id);
    }
    if (wanted.empty()) {
        wanted.resize(13);
        std::iota(wanted.begin(), wanted.end(), 1);
    }
    // run the aggregation check last so it sees every other check's outputs
    std::stable_partition(wanted.begin(), wanted.end(), [](int id) { return id != 6; });

    CheckResult (*checks[])() = {check_01, check_02, check_03, check_04, check_05,
                                 check_06, check_07, check_08, check_09, check_10,
                                 check_11, check_12, check_13};

    std::vector<CheckResult> results;
    for (const int id : wanted) {
        CheckResult r;
        try {
            r = checks[id - 1]();
        } catch (const std::exception& e) {
            r.id = id;
            r.pass = false;
            r.detail = text("unexpected exception: %s", e.what());
        }
        results.push_back(r);
    }
    std::sort(results.begin(), results.end(),
              [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });

    int failed = 0;
    for (const CheckResult& r : results) {
        std::printf("[%2d] %s  %s (%.1f s)\n", r.id, r.pass ? "PASS" : "FAIL",
                    r.detail.c_str(), r.seconds);
        if (!r.pass)
            ++failed;
    }
    std::printf("acceptance: %zu/%zu checks passed\n", results.size() - failed,
                results.size());
    return failed == 0 ? 0 : 1;
}
