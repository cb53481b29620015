// SPDX-License-Identifier: Apache-2.0
//
// emadir — command-line front end for the emanation direction-finding library.
//
// Subcommands:
//   simulate   render a scenario vantage to IQ capture files
//   estimate   recover the relative channel from a capture
//   aoa        estimate angles of arrival from a capture
//   localize   intersect bearings from a CSV file
//   run        execute a full scenario and write report CSVs
//   sweep      repeat a scenario along one parameter axis
#include "CLI11.hpp"

#include "emadir/capture.hpp"
#include "emadir/chanest.hpp"
#include "emadir/aoasolve.hpp"
#include "emadir/errors.hpp"
#include "emadir/localize.hpp"
#include "emadir/pipeline.hpp"
#include "emadir/rng.hpp"
#include "emadir/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr double kPi = 3.14159265358979323846;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool verbose = false;
};

emadir::Scenario load_scenario(const std::string& path, const GlobalOpts& g) {
    emadir::Scenario sc = emadir::parse_scenario(path);
    if (g.seed)
        sc.seed = *g.seed;
    if (g.out)
        sc.out_dir = *g.out;
    return sc;
}

// simulate: materialize the capture a single vantage would record.
int cmd_simulate(const std::string& scenario_path, std::size_t vantage,
                 const std::string& prefix, const GlobalOpts& g) {
    emadir::Scenario sc = load_scenario(scenario_path, g);
    emadir::validate(sc);
    if (vantage == 0 || vantage > sc.vantages.size())
        throw emadir::ValidationError("simulate: --vantage must be in [1, " +
                                      std::to_string(sc.vantages.size()) + "]");

    // Replay the exact geometry the pipeline would use for this vantage.
    emadir::Scenario one = sc;
    one.vantages = {sc.vantages[vantage - 1]};
    const auto& v = one.vantages[0];
    const double heading = v.heading_deg * kPi / 180.0;
    const double dx = one.source.position_m[0] - v.position_m[0];
    const double dy = one.source.position_m[1] - v.position_m[1];
    const double range = std::hypot(dx, dy);

    emadir::PathSet truth;
    double local = std::atan2(dy, dx) - heading;
    while (local > kPi)
        local -= 2.0 * kPi;
    while (local < -kPi)
        local += 2.0 * kPi;
    truth.paths.push_back({local, {1.0, 0.0}});
    for (const auto& p : v.extra_paths)
        truth.paths.push_back(p);

    emadir::EmanationSource src = one.source;
    src.amplitude = one.source.amplitude / std::max(range, 0.1);

    std::vector<emadir::InterferenceSource> intf;
    for (const auto& cfg : one.interferers) {
        const double ix = cfg.source.position_m[0] - v.position_m[0];
        const double iy = cfg.source.position_m[1] - v.position_m[1];
        const double ir = std::hypot(ix, iy);
        double il = std::atan2(iy, ix) - heading;
        while (il > kPi)
            il -= 2.0 * kPi;
        while (il < -kPi)
            il += 2.0 * kPi;
        const double aliased = std::asin(std::clamp(std::sin(il), -1.0, 1.0));
        emadir::InterferenceSource s;
        s.source = cfg.source;
        s.source.amplitude = cfg.source.amplitude / std::max(ir, 0.1);
        s.baseband_offset_hz = cfg.baseband_offset_hz;
        s.phase0 = cfg.phase0;
        emadir::PathSet ip;
        ip.paths.push_back({aliased, {1.0, 0.0}});
        const auto alpha = emadir::true_relative_channel(one.array, ip);
        s.alpha.assign(alpha.begin() + 1, alpha.end());
        intf.push_back(std::move(s));
    }

    emadir::NoiseModel noise = one.noise;
    noise.seed = emadir::Rng::derive(one.seed, 1000 + (vantage - 1));

    const emadir::IQCapture cap = emadir::simulate_capture(
        src, one.array, truth, noise, one.schedule(), one.fs, one.n_sweeps, intf);
    emadir::write_capture(cap, prefix);
    if (g.verbose)
        std::cout << "wrote " << prefix << ".{ref.iq,sw.iq,meta}: "
                  << cap.ref_stream.size() << " samples, " << cap.n_sweeps()
                  << " sweeps\n";
    std::cout << prefix << ".meta\n";
    return 0;
}

// estimate: clock + averaged relative channel from a capture on disk.
int cmd_estimate(const std::string& prefix, long long tau_arg, std::size_t n_packets,
                 double wavelength, const GlobalOpts& g) {
    const emadir::IQCapture cap = emadir::read_capture(prefix);
    const auto packets = emadir::packetize(cap);
    if (n_packets == 0 || n_packets > packets.size())
        n_packets = packets.size();

    const std::size_t max_period = std::min<std::size_t>(8192, cap.ref_stream.size() / 4);
    const emadir::ClockEstimate clock = emadir::detect_clock(cap.ref_stream, 2, max_period);
    const std::size_t tau = tau_arg < 0
                                ? static_cast<std::size_t>(std::llround(clock.period_samples))
                                : static_cast<std::size_t>(tau_arg);

    std::vector<emadir::RelativeChannel> est;
    double score = std::numeric_limits<double>::quiet_NaN();
    if (tau > 0) {
        std::vector<emadir::RelativeChannel> inv;
        for (std::size_t p = 0; p < n_packets; ++p) {
            est.push_back(emadir::estimate_offset(packets[p], tau, wavelength));
            inv.push_back(emadir::estimate_inverse(packets[p], tau, wavelength));
        }
        const auto chk = emadir::detect_interference(emadir::average_channels(est),
                                                     emadir::average_channels(inv));
        score = chk.score;
    } else {
        for (std::size_t p = 0; p < n_packets; ++p)
            est.push_back(emadir::estimate_standard(packets[p], wavelength));
    }
    const emadir::RelativeChannel h = emadir::average_channels(est);

    std::printf("clock_period_samples,%.9g\n", clock.period_samples);
    std::printf("clock_hz,%.9g\n", cap.fs / clock.period_samples);
    std::printf("clock_confidence_db,%.9g\n", clock.confidence_db);
    std::printf("tau_samples,%zu\n", tau);
    std::printf("interference_score,%.9g\n", score);
    std::printf("antenna,h_re,h_im\n");
    for (std::size_t i = 0; i < h.values.size(); ++i)
        std::printf("%zu,%.9g,%.9g\n", i, h.values[i].real(), h.values[i].imag());
    (void)g;
    return 0;
}

// aoa: angles of arrival from a capture on disk.
int cmd_aoa(const std::string& prefix, const std::string& method_name, double beta,
            std::size_t grid, double spacing_m, double wavelength_m, long long tau_arg,
            std::size_t n_packets, const GlobalOpts& g) {
    const emadir::IQCapture cap = emadir::read_capture(prefix);
    const auto packets = emadir::packetize(cap);
    if (n_packets == 0 || n_packets > packets.size())
        n_packets = packets.size();

    const std::size_t max_period = std::min<std::size_t>(8192, cap.ref_stream.size() / 4);
    const emadir::ClockEstimate clock = emadir::detect_clock(cap.ref_stream, 2, max_period);
    const std::size_t tau = tau_arg < 0
                                ? static_cast<std::size_t>(std::llround(clock.period_samples))
                                : static_cast<std::size_t>(tau_arg);

    std::vector<emadir::RelativeChannel> est;
    for (std::size_t p = 0; p < n_packets; ++p) {
        if (tau > 0)
            est.push_back(emadir::estimate_offset(packets[p], tau, wavelength_m));
        else
            est.push_back(emadir::estimate_standard(packets[p], wavelength_m));
    }
    const emadir::RelativeChannel h = emadir::average_channels(est);
    const double dol = spacing_m / wavelength_m;

    emadir::AoAEstimate out;
    std::size_t iters = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (method_name == "sparse") {
        const auto w = emadir::build_window_matrix(h.values.size(), grid);
        const auto p = emadir::ifft_profile(h, grid);
        const auto prof = emadir::solve_sparse(p, w, beta, dol);
        out = emadir::extract_angles(prof);
        iters = prof.solver_iters;
        residual = prof.residual;
    } else if (method_name == "music") {
        out = emadir::music_aoa(h, dol);
    } else if (method_name == "spotfi") {
        out = emadir::spotfi_aoa(h, dol,
                                 std::min<std::size_t>(5, h.values.size() - 1));
    } else if (method_name == "ifft") {
        emadir::AoAProfile prof;
        prof.grid_size = grid;
        prof.d_over_lambda = dol;
        prof.coeffs = emadir::ifft_profile(h, grid);
        for (std::size_t j = 0; j < grid; ++j)
            if (std::abs(prof.psi(j)) > dol + 1e-12)
                prof.coeffs(static_cast<Eigen::Index>(j)) = {0.0, 0.0};
        out = emadir::extract_angles(prof);
    } else {
        throw emadir::ValidationError("aoa: method must be sparse, music, spotfi or ifft");
    }

    std::printf("aoa_deg,weight_mag,weight_phase_rad\n");
    for (std::size_t i = 0; i < out.angles_rad.size(); ++i)
        std::printf("%.9g,%.9g,%.9g\n", out.angles_rad[i] * 180.0 / kPi,
                    std::abs(out.weights[i]), std::arg(out.weights[i]));
    if (g.verbose)
        std::fprintf(stderr, "solver_iters=%zu residual=%.9g\n", iters, residual);
    return 0;
}

// localize: read bearings CSV (origin_x,origin_y,angle_deg,weight) and intersect.
int cmd_localize(const std::string& csv_path, const GlobalOpts& g) {
    std::ifstream in(csv_path);
    if (!in)
        throw emadir::IoError("localize: cannot open " + csv_path);

    std::vector<emadir::Bearing> bearings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line_no == 1 && line.find_first_not_of("0123456789.,+-eE \t\r") != std::string::npos)
            continue; // header row
        std::istringstream row(line);
        std::string field;
        std::array<double, 4> vals{0.0, 0.0, 0.0, 1.0};
        std::size_t n = 0;
        while (std::getline(row, field, ',') && n < 4) {
            try {
                vals[n] = std::stod(field);
            } catch (const std::exception&) {
                throw emadir::ValidationError("localize: bad number on line " +
                                              std::to_string(line_no) + ": `" + field + "`");
            }
            ++n;
        }
        if (n < 3)
            throw emadir::ValidationError("localize: line " + std::to_string(line_no) +
                                          " needs origin_x,origin_y,angle_deg[,weight]");
        emadir::Bearing b;
        b.origin_m = {vals[0], vals[1]};
        b.global_angle_rad = vals[2] * kPi / 180.0;
        b.confidence = n >= 4 ? vals[3] : 1.0;
        bearings.push_back(b);
    }

    const emadir::LocalizationResult r = emadir::triangulate(bearings);
    std::printf("x_m,y_m,residual_m,n_bearings,condition\n");
    std::printf("%.9g,%.9g,%.9g,%zu,%.9g\n", r.position_m[0], r.position_m[1], r.residual_m,
                r.n_bearings, r.condition);
    (void)g;
    return 0;
}

int cmd_run(const std::string& scenario_path, const GlobalOpts& g) {
    const emadir::Scenario sc = load_scenario(scenario_path, g);
    const emadir::Report report = emadir::run_scenario(sc);
    emadir::write_report(report, sc.out_dir);
    if (g.verbose) {
        for (const auto& v : report.vantages)
            std::fprintf(stderr,
                         "vantage %zu: clock %.6g Hz, snr %.3g dB, aoa %.6g deg "
                         "(err %.3g deg)\n",
                         v.vantage, v.clock_hz, v.snr_db, v.aoa_est_deg, v.aoa_error_deg);
        if (report.has_localization)
            std::fprintf(stderr, "localized at (%.6g, %.6g), error %.3g m\n",
                         report.localization.position_m[0], report.localization.position_m[1],
                         report.localization_error_m);
    }
    std::cout << sc.out_dir << "/vantages.csv\n" << sc.out_dir << "/localization.csv\n";
    return static_cast<int>(report.status);
}

int cmd_sweep(const std::string& scenario_path, const std::string& axis_name,
              const std::vector<double>& values, std::size_t n_seeds, std::size_t n_threads,
              const std::string& out_path, const GlobalOpts& g) {
    const emadir::Scenario sc = load_scenario(scenario_path, g);
    const emadir::SweepAxis axis = emadir::sweep_axis_from_string(axis_name);
    const auto rows = emadir::run_sweep(sc, axis, values, n_seeds, n_threads);
    emadir::write_sweep_csv(out_path, rows);
    std::cout << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"emadir: direction finding on switched-antenna IQ captures"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    GlobalOpts g;
    std::uint64_t seed_val = 0;
    std::string out_val;
    auto* seed_opt = app.add_option("--seed", seed_val, "Override the scenario seed");
    auto* out_opt = app.add_option("--out", out_val, "Override the output directory/file");
    app.add_flag("--verbose", g.verbose, "Print progress to stderr");

    std::string scenario_path;
    std::string prefix = "capture";
    std::size_t vantage = 1;
    auto* sim = app.add_subcommand("simulate", "Render one vantage of a scenario to IQ files");
    sim->add_option("scenario", scenario_path, "Scenario file")->required();
    sim->add_option("--vantage", vantage, "1-based vantage index");
    sim->add_option("--prefix", prefix, "Output file prefix");

    std::string est_prefix;
    long long tau_arg = -1;
    std::size_t n_packets = 0;
    double wavelength = 0.625;
    auto* est = app.add_subcommand("estimate", "Estimate clock and relative channel");
    est->add_option("prefix", est_prefix, "Capture file prefix")->required();
    est->add_option("--tau", tau_arg, "Correlation lag in samples (-1: clock period, 0: none)");
    est->add_option("--packets", n_packets, "Packets to average (0: all)");
    est->add_option("--wavelength", wavelength, "Carrier wavelength in metres");

    std::string aoa_prefix, method = "sparse";
    double beta = 1.0;
    std::size_t grid = 256;
    double spacing = 0.0625;
    double aoa_wavelength = 0.625;
    long long aoa_tau = -1;
    std::size_t aoa_packets = 0;
    auto* aoa = app.add_subcommand("aoa", "Estimate angles of arrival from a capture");
    aoa->add_option("prefix", aoa_prefix, "Capture file prefix")->required();
    aoa->add_option("--method", method, "sparse | music | spotfi | ifft");
    aoa->add_option("--beta", beta, "Sparsity weight");
    aoa->add_option("--grid", grid, "Angular grid size");
    aoa->add_option("--spacing", spacing, "Antenna spacing in metres");
    aoa->add_option("--wavelength", aoa_wavelength, "Carrier wavelength in metres");
    aoa->add_option("--tau", aoa_tau, "Correlation lag in samples (-1: clock period, 0: none)");
    aoa->add_option("--packets", aoa_packets, "Packets to average (0: all)");

    std::string bearings_path;
    auto* loc = app.add_subcommand("localize", "Intersect bearings from a CSV file");
    loc->add_option("bearings", bearings_path,
                    "CSV with rows origin_x,origin_y,angle_deg[,weight]")
        ->required();

    std::string run_path;
    auto* run = app.add_subcommand("run", "Run a scenario end to end and write report CSVs");
    run->add_option("scenario", run_path, "Scenario file")->required();

    std::string sweep_path, axis_name;
    std::vector<double> sweep_values;
    std::size_t sweep_seeds = 1;
    std::size_t sweep_threads = 0;
    std::string sweep_out = "sweep.csv";
    auto* swp = app.add_subcommand("sweep", "Repeat a scenario along one parameter axis");
    swp->add_option("scenario", sweep_path, "Scenario file")->required();
    swp->add_option("--axis", axis_name, "beta | range | packets | tau")->required();
    swp->add_option("--values", sweep_values, "Axis values")->required()->delimiter(',');
    swp->add_option("--seeds", sweep_seeds, "Seeds per value");
    swp->add_option("--threads", sweep_threads, "Worker threads (0: auto)");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0)
        g.seed = seed_val;
    if (out_opt->count() > 0)
        g.out = out_val;

    try {
        if (sim->parsed())
            return cmd_simulate(scenario_path, vantage, g.out.value_or(prefix), g);
        if (est->parsed())
            return cmd_estimate(est_prefix, tau_arg, n_packets, wavelength, g);
        if (aoa->parsed())
            return cmd_aoa(aoa_prefix, method, beta, grid, spacing, aoa_wavelength, aoa_tau,
                           aoa_packets, g);
        if (loc->parsed())
            return cmd_localize(bearings_path, g);
        if (run->parsed())
            return cmd_run(run_path, g);
        if (swp->parsed())
            return cmd_sweep(sweep_path, axis_name, sweep_values, sweep_seeds, sweep_threads,
                             g.out.value_or(sweep_out), g);
    } catch (const emadir::NoClockFoundError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const emadir::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const emadir::ProvenanceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const emadir::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
