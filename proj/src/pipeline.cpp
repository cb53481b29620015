// SPDX-License-Identifier: Apache-2.0
#include "emadir/pipeline.hpp"

#include "emadir/errors.hpp"
#include "emadir/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace emadir {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSpeedOfLight = 299792458.0;

double wrap_angle(double a) {
    while (a > kPi)
        a -= 2.0 * kPi;
    while (a < -kPi)
        a += 2.0 * kPi;
    return a;
}

std::string fmt_num(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct VantageGeometry {
    double range_m = 0.0;
    double local_aoa_rad = 0.0;
    double heading_rad = 0.0;
    PathSet truth;
    EmanationSource received_source;
    std::vector<InterferenceSource> interferers;
};

VantageGeometry vantage_geometry(const Scenario& sc, std::size_t idx) {
    const VantageConfig& v = sc.vantages[idx];
    VantageGeometry g;
    g.heading_rad = v.heading_deg * kPi / 180.0;

    const double dx = sc.source.position_m[0] - v.position_m[0];
    const double dy = sc.source.position_m[1] - v.position_m[1];
    g.range_m = std::hypot(dx, dy);
    g.local_aoa_rad = wrap_angle(std::atan2(dy, dx) - g.heading_rad);

    g.truth.paths.push_back({g.local_aoa_rad, {1.0, 0.0}});
    for (const Path& p : v.extra_paths)
        g.truth.paths.push_back(p);

    g.received_source = sc.source;
    g.received_source.amplitude = sc.source.amplitude / std::max(g.range_m, 0.1);

    for (const InterfererConfig& cfg : sc.interferers) {
        const double ix = cfg.source.position_m[0] - v.position_m[0];
        const double iy = cfg.source.position_m[1] - v.position_m[1];
        const double i_range = std::hypot(ix, iy);
        const double i_local = wrap_angle(std::atan2(iy, ix) - g.heading_rad);
        // A ULA only senses sin(theta); emitters behind the array alias into
        // the forward half-plane.
        const double aliased = std::asin(std::clamp(std::sin(i_local), -1.0, 1.0));

        InterferenceSource intf;
        intf.source = cfg.source;
        intf.source.amplitude = cfg.source.amplitude / std::max(i_range, 0.1);
        intf.baseband_offset_hz = cfg.baseband_offset_hz;
        intf.phase0 = cfg.phase0;
        PathSet ip;
        ip.paths.push_back({aliased, {1.0, 0.0}});
        const auto alpha_full = true_relative_channel(sc.array, ip);
        intf.alpha.assign(alpha_full.begin() + 1, alpha_full.end());
        g.interferers.push_back(std::move(intf));
    }
    return g;
}

VantageOutcome process_vantage(const Scenario& sc, std::size_t idx) {
    const VantageGeometry geo = vantage_geometry(sc, idx);

    NoiseModel noise = sc.noise;
    noise.seed = Rng::derive(sc.seed, 1000 + idx);

    const SwitchSchedule schedule = sc.schedule();
    const IQCapture cap =
        simulate_capture(geo.received_source, sc.array, geo.truth, noise, schedule, sc.fs,
                         sc.n_sweeps, geo.interferers);
    const std::vector<Packet> packets = packetize(cap);

    VantageOutcome out;
    out.vantage = idx + 1;

    const std::size_t max_period =
        std::min(sc.clock_max_period, cap.ref_stream.size() / 4);
    try {
        out.clock = detect_clock(cap.ref_stream, sc.clock_min_period, max_period);
    } catch (const NoClockFoundError& e) {
        throw NoClockFoundError("vantage " + std::to_string(idx + 1) + ": " + e.what());
    }
    out.clock_hz = sc.fs / out.clock.period_samples;

    std::size_t tau = 0;
    switch (sc.tau_policy) {
    case TauPolicy::period:
        tau = static_cast<std::size_t>(std::llround(out.clock.period_samples));
        break;
    case TauPolicy::fixed:
        tau = sc.tau_fixed;
        break;
    case TauPolicy::none:
        tau = 0;
        break;
    }

    const double wavelength = sc.array.carrier_wavelength_m;
    const std::size_t n_chunks = packets.size() / sc.n_packets;
    const std::size_t max_attempts = std::min<std::size_t>(sc.retries + 1, n_chunks);
    std::size_t accepted_chunk = 0;
    out.interference_score = std::numeric_limits<double>::quiet_NaN();

    if (tau > 0) {
        out.interference_unresolved = true;
        for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
            std::vector<RelativeChannel> off, inv;
            for (std::size_t p = 0; p < sc.n_packets; ++p) {
                const Packet& pkt = packets[attempt * sc.n_packets + p];
                off.push_back(estimate_offset(pkt, tau, wavelength));
                inv.push_back(estimate_inverse(pkt, tau, wavelength));
            }
            const RelativeChannel avg_off = average_channels(off);
            const RelativeChannel avg_inv = average_channels(inv);
            const InterferenceCheck chk =
                detect_interference(avg_off, avg_inv, sc.interference_threshold);
            out.interference_score = chk.score;
            out.attempts = attempt + 1;
            out.channel = avg_off;
            accepted_chunk = attempt;
            if (!chk.interfered) {
                out.interference_unresolved = false;
                break;
            }
        }
    } else {
        std::vector<RelativeChannel> std_est;
        for (std::size_t p = 0; p < sc.n_packets; ++p)
            std_est.push_back(estimate_standard(packets[p], wavelength));
        out.channel = average_channels(std_est);
        out.attempts = 1;
    }

    {
        const double base_lag = tau > 0 ? static_cast<double>(tau) : 0.0;
        const cvec enhanced = enhance_product(cap.ref_stream, base_lag, sc.snr_offsets);
        out.snr_db = spike_snr(enhanced, out.clock);
    }

    const double dol = sc.array.d_over_lambda();
    switch (sc.method) {
    case AoAMethod::sparse: {
        const WindowMatrix w = build_window_matrix(sc.array.n_switched + 1, sc.grid_size);
        const Eigen::VectorXcd p = ifft_profile(out.channel, sc.grid_size);
        const AoAProfile prof = solve_sparse(p, w, sc.beta, dol, sc.solve_opts);
        out.estimate = extract_angles(prof, sc.rel_threshold);
        out.solver_iters = prof.solver_iters;
        out.solver_residual = prof.residual;
        out.solver_converged = prof.converged;
        break;
    }
    case AoAMethod::joint: {
        const WindowMatrix w = build_window_matrix(sc.array.n_switched + 1, sc.grid_size);
        std::vector<JointMeasurement> meas;
        std::vector<Eigen::VectorXcd> profiles;
        const double f_carrier = kSpeedOfLight / wavelength;
        for (std::size_t k = 1; k <= sc.joint_harmonics; ++k) {
            std::vector<RelativeChannel> hk;
            for (std::size_t p = 0; p < sc.n_packets; ++p)
                hk.push_back(estimate_harmonic(packets[accepted_chunk * sc.n_packets + p],
                                               out.clock.period_samples, k, wavelength));
            const RelativeChannel avg_k = average_channels(hk);
            profiles.push_back(ifft_profile(avg_k, sc.grid_size));
            JointMeasurement m;
            m.profile = profiles.back();
            m.window = &w;
            m.d_over_lambda = dol * (1.0 + static_cast<double>(k) * out.clock_hz / f_carrier);
            m.tag = "harmonic-" + std::to_string(k);
            meas.push_back(std::move(m));
        }
        const JointProfile prof = solve_joint(meas, sc.lambda_group, sc.solve_opts);
        out.estimate = extract_angles(prof, sc.rel_threshold);
        out.solver_iters = prof.solver_iters;
        out.solver_residual = prof.residual;
        out.solver_converged = prof.converged;
        break;
    }
    case AoAMethod::music:
        out.estimate = music_aoa(out.channel, dol);
        break;
    case AoAMethod::spotfi: {
        const std::size_t n = out.channel.values.size();
        out.estimate = spotfi_aoa(out.channel, dol, std::min<std::size_t>(5, n - 1));
        break;
    }
    case AoAMethod::ifft: {
        AoAProfile prof;
        prof.grid_size = sc.grid_size;
        prof.d_over_lambda = dol;
        prof.coeffs = ifft_profile(out.channel, sc.grid_size);
        for (std::size_t j = 0; j < sc.grid_size; ++j)
            if (std::abs(prof.psi(j)) > dol + 1e-12)
                prof.coeffs(static_cast<Eigen::Index>(j)) = std::complex<double>(0.0, 0.0);
        out.estimate = extract_angles(prof, sc.rel_threshold);
        break;
    }
    }

    out.aoa_est_deg = out.estimate.angles_rad[0] * 180.0 / kPi;
    out.aoa_true_deg = geo.local_aoa_rad * 180.0 / kPi;
    out.aoa_error_deg = aoa_error_deg(out.estimate, geo.truth);
    out.bearing_deg = (geo.heading_rad + out.estimate.angles_rad[0]) * 180.0 / kPi;
    out.weight_mag = std::abs(out.estimate.weights[0]);
    return out;
}

} // namespace

Report run_scenario(const Scenario& sc) {
    validate(sc);

    Report report;
    for (std::size_t i = 0; i < sc.vantages.size(); ++i)
        report.vantages.push_back(process_vantage(sc, i));

    bool any_unresolved = false;
    bool any_nonconverged = false;
    for (const VantageOutcome& v : report.vantages) {
        any_unresolved = any_unresolved || v.interference_unresolved;
        any_nonconverged = any_nonconverged || !v.solver_converged;
    }
    report.status = any_unresolved   ? RunStatus::interference_unresolved
                    : any_nonconverged ? RunStatus::solver_nonconvergence
                                       : RunStatus::ok;

    report.localization_error_m = std::numeric_limits<double>::quiet_NaN();
    if (sc.vantages.size() >= 2) {
        std::vector<Bearing> bearings;
        for (std::size_t i = 0; i < report.vantages.size(); ++i) {
            Bearing b;
            b.origin_m = sc.vantages[i].position_m;
            b.global_angle_rad = report.vantages[i].bearing_deg * kPi / 180.0;
            b.confidence = report.vantages[i].weight_mag;
            bearings.push_back(b);
        }
        try {
            report.localization = triangulate(bearings);
            report.has_localization = true;
            report.localization_error_m =
                localization_error_m(report.localization, sc.source.position_m);
        } catch (const IllConditionedError&) {
            report.has_localization = false;
        }
    }
    return report;
}

void write_report(const Report& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir + "/vantages.csv", std::ios::trunc);
        if (!out)
            throw IoError("write_report: cannot open " + out_dir + "/vantages.csv");
        out << "vantage,clock_period_samples,clock_hz,clock_confidence_db,snr_db,tau_samples,"
               "interference_score,attempts,interference_unresolved,aoa_est_deg,aoa_true_deg,"
               "aoa_error_deg,bearing_deg,weight_mag,n_paths,solver_iters,solver_residual,"
               "solver_converged\n";
        for (const VantageOutcome& v : report.vantages) {
            out << v.vantage << ',' << fmt_num(v.clock.period_samples) << ','
                << fmt_num(v.clock_hz) << ',' << fmt_num(v.clock.confidence_db) << ','
                << fmt_num(v.snr_db) << ',' << v.channel.tau_samples << ','
                << fmt_num(v.interference_score) << ',' << v.attempts << ','
                << (v.interference_unresolved ? 1 : 0) << ',' << fmt_num(v.aoa_est_deg) << ','
                << fmt_num(v.aoa_true_deg) << ',' << fmt_num(v.aoa_error_deg) << ','
                << fmt_num(v.bearing_deg) << ',' << fmt_num(v.weight_mag) << ','
                << v.estimate.angles_rad.size() << ',' << v.solver_iters << ','
                << fmt_num(v.solver_residual) << ',' << (v.solver_converged ? 1 : 0) << '\n';
        }
        if (!out)
            throw IoError("write_report: write failed for " + out_dir + "/vantages.csv");
    }

    {
        std::ofstream out(out_dir + "/localization.csv", std::ios::trunc);
        if (!out)
            throw IoError("write_report: cannot open " + out_dir + "/localization.csv");
        out << "status,x_m,y_m,residual_m,n_bearings,condition,error_m\n";
        out << static_cast<int>(report.status) << ',';
        if (report.has_localization) {
            out << fmt_num(report.localization.position_m[0]) << ','
                << fmt_num(report.localization.position_m[1]) << ','
                << fmt_num(report.localization.residual_m) << ','
                << report.localization.n_bearings << ','
                << fmt_num(report.localization.condition) << ','
                << fmt_num(report.localization_error_m) << '\n';
        } else {
            out << "nan,nan,nan,0,nan,nan\n";
        }
        if (!out)
            throw IoError("write_report: write failed for " + out_dir + "/localization.csv");
    }
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "beta")
        return SweepAxis::beta;
    if (name == "range")
        return SweepAxis::range;
    if (name == "packets")
        return SweepAxis::packets;
    if (name == "tau")
        return SweepAxis::tau;
    throw ValidationError("sweep: axis must be beta, range, packets or tau, got `" + name + "`");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::beta:
        return "beta";
    case SweepAxis::range:
        return "range";
    case SweepAxis::packets:
        return "packets";
    case SweepAxis::tau:
        return "tau";
    }
    return "?";
}

namespace {

Scenario scenario_for_point(const Scenario& base, SweepAxis axis, double value) {
    Scenario sc = base;
    switch (axis) {
    case SweepAxis::beta:
        if (!(value >= 0.0))
            throw ValidationError("sweep: beta values must be nonnegative");
        sc.beta = value;
        break;
    case SweepAxis::range: {
        if (sc.vantages.size() != 1)
            throw ValidationError("sweep: the range axis requires exactly one vantage");
        if (!(value > 0.0))
            throw ValidationError("sweep: range values must be positive");
        const auto& v = sc.vantages[0];
        const double dx = base.source.position_m[0] - v.position_m[0];
        const double dy = base.source.position_m[1] - v.position_m[1];
        const double r = std::hypot(dx, dy);
        if (!(r > 0.0))
            throw ValidationError("sweep: source sits on the vantage, range axis undefined");
        sc.source.position_m[0] = v.position_m[0] + dx / r * value;
        sc.source.position_m[1] = v.position_m[1] + dy / r * value;
        break;
    }
    case SweepAxis::packets: {
        if (!(value >= 1.0) || value != std::floor(value))
            throw ValidationError("sweep: packets values must be positive integers");
        sc.n_packets = static_cast<std::size_t>(value);
        const std::size_t needed = sc.n_packets * (sc.retries + 1);
        sc.n_sweeps = std::max(sc.n_sweeps, needed);
        break;
    }
    case SweepAxis::tau: {
        if (!(value >= 0.0) || value != std::floor(value))
            throw ValidationError("sweep: tau values must be nonnegative integer sample counts");
        if (value == 0.0) {
            sc.tau_policy = TauPolicy::none;
        } else {
            sc.tau_policy = TauPolicy::fixed;
            sc.tau_fixed = static_cast<std::size_t>(value);
        }
        break;
    }
    }
    return sc;
}

} // namespace

std::vector<SweepRow> run_sweep(const Scenario& sc, SweepAxis axis,
                                std::span<const double> values, std::size_t n_seeds,
                                std::size_t n_threads) {
    validate(sc);
    if (values.empty())
        throw ValidationError("sweep: values must be nonempty");
    if (n_seeds == 0)
        throw ValidationError("sweep: n_seeds must be at least 1");
    for (const double v : values)
        (void)scenario_for_point(sc, axis, v); // fail fast on bad values

    const std::size_t n_points = values.size() * n_seeds;
    std::vector<SweepRow> rows(n_points);

    if (n_threads == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        n_threads = std::clamp<std::size_t>(hw == 0 ? 1 : hw, 1, 8);
    }
    n_threads = std::min(n_threads, n_points);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t pt = next.fetch_add(1);
            if (pt >= n_points)
                return;
            const std::size_t vi = pt / n_seeds;
            SweepRow& row = rows[pt];
            row.axis_value = values[vi];

            Scenario sp = scenario_for_point(sc, axis, values[vi]);
            sp.seed = Rng::derive(sc.seed, pt + 1);
            row.seed = sp.seed;
            try {
                const Report rep = run_scenario(sp);
                double aoa_acc = 0.0;
                double snr_acc = 0.0;
                std::size_t iters = 0;
                for (const VantageOutcome& v : rep.vantages) {
                    aoa_acc += v.aoa_error_deg;
                    snr_acc += v.snr_db;
                    iters = std::max(iters, v.solver_iters);
                }
                row.aoa_error_deg = aoa_acc / static_cast<double>(rep.vantages.size());
                row.snr_db = snr_acc / static_cast<double>(rep.vantages.size());
                row.loc_error_m = rep.localization_error_m;
                row.iters = iters;
            } catch (const std::exception&) {
                row.aoa_error_deg = std::numeric_limits<double>::quiet_NaN();
                row.loc_error_m = std::numeric_limits<double>::quiet_NaN();
                row.snr_db = std::numeric_limits<double>::quiet_NaN();
                row.iters = 0;
            }
        }
    };

    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < n_threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return rows;
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("write_sweep_csv: cannot open " + path);
    out << "axis_value,seed,aoa_error_deg,loc_error_m,snr_db,iters\n";
    for (const SweepRow& r : rows)
        out << fmt_num(r.axis_value) << ',' << r.seed << ',' << fmt_num(r.aoa_error_deg) << ','
            << fmt_num(r.loc_error_m) << ',' << fmt_num(r.snr_db) << ',' << r.iters << '\n';
    if (!out)
        throw IoError("write_sweep_csv: write failed for " + path);
}

} // namespace emadir
