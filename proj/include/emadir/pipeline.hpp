// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/localize.hpp"
#include "emadir/scenario.hpp"

#include <span>
#include <string>
#include <vector>

namespace emadir {

// Values double as process exit codes.
enum class RunStatus {
    ok = 0,
    validation = 2,
    no_clock = 3,
    interference_unresolved = 4,
    solver_nonconvergence = 5,
};

struct VantageOutcome {
    std::size_t vantage = 0; // 1-based, matches [vantage.N]
    ClockEstimate clock;
    double clock_hz = 0.0;
    double snr_db = 0.0;
    double interference_score = 0.0;
    std::size_t attempts = 0;
    bool interference_unresolved = false;
    RelativeChannel channel;
    AoAEstimate estimate;
    double aoa_est_deg = 0.0;
    double aoa_true_deg = 0.0;
    double aoa_error_deg = 0.0;
    double bearing_deg = 0.0;
    double weight_mag = 0.0;
    std::size_t solver_iters = 0;
    double solver_residual = 0.0;
    bool solver_converged = true;
};

struct Report {
    std::vector<VantageOutcome> vantages;
    bool has_localization = false;
    LocalizationResult localization;
    double localization_error_m = 0.0;
    RunStatus status = RunStatus::ok;
};

// Full pipeline per vantage: simulate -> packetize -> clock detect ->
// per-packet estimation with the interference retry policy -> averaging ->
// AoA -> triangulation across vantages. Throws ValidationError on bad
// scenarios and NoClockFoundError (labeled with the vantage) when a capture
// has no periodic component; interference exhaustion and solver
// non-convergence are reported through status, not exceptions.
Report run_scenario(const Scenario& sc);

// Writes <out_dir>/vantages.csv and <out_dir>/localization.csv with fixed
// formatting: identical scenario and seed produce byte-identical files.
void write_report(const Report& report, const std::string& out_dir);

enum class SweepAxis { beta, range, packets, tau };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    double aoa_error_deg = 0.0;
    double loc_error_m = 0.0;
    double snr_db = 0.0;
    std::size_t iters = 0;
};

// Repeats the scenario once per (value, seed) point with a per-point derived
// seed. beta overrides the sparsity weight; range moves the source along its
// original bearing from the (single) vantage, the 1/r amplitude model turning
// it into an SNR axis; packets overrides the averaging count; tau 0 selects
// the lag-free estimator and tau > 0 a fixed lag in samples. Points run in
// parallel (n_threads = 0 picks a default); row order is deterministic.
// Failed points (e.g. no clock at extreme range) carry NaN metrics.
std::vector<SweepRow> run_sweep(const Scenario& sc, SweepAxis axis,
                                std::span<const double> values, std::size_t n_seeds,
                                std::size_t n_threads = 0);

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

} // namespace emadir
