// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "emadir/errors.hpp"
#include "emadir/pipeline.hpp"
#include "emadir/scenario.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace emadir;

namespace {

// small, fast, noiseless two-vantage setup with both arrays aimed straight
// at the source, so the direct path sits on broadside
std::string base_text() {
    return R"(# test scenario
[source]
clock_hz = 48000
duty = 0.5
amplitude = 1
position_m = 2, 3

[array]
n_switched = 8
spacing_m = 0.0625
carrier_wavelength_m = 0.625
fs = 3072000
dwell_samples = 4096
guard_samples = 128

[vantage.1]
position_m = 0, 0
heading_deg = 56.309932474020215

[vantage.2]
position_m = 5, 0
heading_deg = 135

[noise]
power = 0
rho = 0

[estimator]
tau_policy = period
n_packets = 2
retries = 1

[solver]
method = sparse
beta = 1
grid_size = 64

[run]
seed = 1
n_sweeps = 4
)";
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::string parse_error(const std::string& text) {
    try {
        (void)parse_scenario_text(text, "test");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("emadir_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("a full scenario file parses into the expected fields") {
    std::string text = base_text();
    text += R"(
[interferer.1]
clock_hz = 51200
amplitude = 0.4
position_m = 4, 0.5
baseband_offset_hz = 12000
phase0 = 0.25
)";
    text = replace_once(text, "heading_deg = 135\n",
                        "heading_deg = 135\nextra_paths = 25:0.4:-0.1; -10:0.2:0\n");
    text = replace_once(text, "guard_samples = 128\n",
                        "guard_samples = 128\norder = 2,0,1,3,4,5,6,7\n");

    const Scenario sc = parse_scenario_text(text, "inline");

    CHECK(sc.source.clock_hz == 48000.0);
    CHECK(sc.source.duty == 0.5);
    CHECK(sc.source.position_m[0] == 2.0);
    CHECK(sc.source.position_m[1] == 3.0);
    CHECK(sc.array.n_switched == 8);
    CHECK(sc.array.spacing_m == 0.0625);
    CHECK(sc.fs == 3072000.0);
    CHECK(sc.dwell_samples == 4096);
    CHECK(sc.guard_samples == 128);
    REQUIRE(sc.order.size() == 8);
    CHECK(sc.order[0] == 2);
    CHECK(sc.order[1] == 0);

    REQUIRE(sc.vantages.size() == 2);
    CHECK(sc.vantages[0].position_m[0] == 0.0);
    CHECK(sc.vantages[1].heading_deg == 135.0);
    REQUIRE(sc.vantages[1].extra_paths.size() == 2);
    CHECK(sc.vantages[1].extra_paths[0].aoa_rad ==
          doctest::Approx(25.0 * 3.14159265358979323846 / 180.0));
    CHECK(sc.vantages[1].extra_paths[0].gain == std::complex<double>(0.4, -0.1));

    REQUIRE(sc.interferers.size() == 1);
    CHECK(sc.interferers[0].source.clock_hz == 51200.0);
    CHECK(sc.interferers[0].baseband_offset_hz == 12000.0);
    CHECK(sc.interferers[0].phase0 == 0.25);

    CHECK(sc.tau_policy == TauPolicy::period);
    CHECK(sc.n_packets == 2);
    CHECK(sc.retries == 1);
    CHECK(sc.method == AoAMethod::sparse);
    CHECK(sc.beta == 1.0);
    CHECK(sc.grid_size == 64);
    CHECK(sc.seed == 1);
    CHECK(sc.n_sweeps == 4);

    const SwitchSchedule sch = sc.schedule();
    CHECK(sch.n_antennas == 8);
    CHECK(sch.order == sc.order);
}

TEST_CASE("schedule defaults to identity order") {
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const SwitchSchedule sch = sc.schedule();
    REQUIRE(sch.order.size() == 8);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(sch.order[i] == i);
}

TEST_CASE("parse errors name the offending section and key") {
    CHECK(parse_error(base_text() + "\n[array2]\nx = 1\n").find("[array2]") !=
          std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "fs = 3072000", "fs = fast"))
              .find("array.fs") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "beta = 1", "bogus = 1"))
              .find("solver.bogus") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "clock_hz = 48000\n", ""))
              .find("source.clock_hz") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "position_m = 2, 3", "position_m = 2"))
              .find("source.position_m") != std::string::npos);
    CHECK(parse_error(base_text() + "\n[source]\nclock_hz = 1\n")
              .find("duplicate section") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "beta = 1", "beta = 1\nbeta = 2"))
              .find("duplicate key solver.beta") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "tau_policy = period", "tau_policy = always"))
              .find("estimator.tau_policy") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "method = sparse", "method = fancy"))
              .find("solver.method") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "n_packets = 2", "n_packets = 2.5"))
              .find("estimator.n_packets") != std::string::npos);
    CHECK(parse_error(replace_once(base_text(), "[vantage.2]", "[vantage.3]"))
              .find("vantage.3") != std::string::npos);
    CHECK(parse_error(replace_once(
              base_text(), "heading_deg = 135\n",
              "heading_deg = 135\nextra_paths = 25:0.4\n"))
              .find("vantage.2.extra_paths") != std::string::npos);
}

TEST_CASE("cross-field validation rejects inconsistent scenarios") {
    // source behind the array names the vantage
    CHECK(parse_error(replace_once(base_text(), "heading_deg = 135", "heading_deg = 300"))
              .find("vantage.2") != std::string::npos);
    // too few sweeps for the retry budget
    CHECK(parse_error(replace_once(base_text(), "n_sweeps = 4", "n_sweeps = 3"))
              .find("n_sweeps") != std::string::npos);
    // grid below the oversampling floor
    CHECK(parse_error(replace_once(base_text(), "grid_size = 64", "grid_size = 35"))
              .find("grid_size") != std::string::npos);
    // spatial aliasing: spacing must stay below half a wavelength
    CHECK_THROWS_AS((void)parse_scenario_text(
                        replace_once(base_text(), "spacing_m = 0.0625", "spacing_m = 0.35"),
                        "inline"),
                    ValidationError);
    // fixed lag policy without a lag
    CHECK(parse_error(replace_once(base_text(), "tau_policy = period", "tau_policy = fixed"))
              .find("tau_fixed") != std::string::npos);
}

TEST_CASE("a noiseless two-vantage run localizes the source") {
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const Report rep = run_scenario(sc);

    CHECK(rep.status == RunStatus::ok);
    REQUIRE(rep.vantages.size() == 2);
    for (const VantageOutcome& v : rep.vantages) {
        CHECK(std::abs(v.clock.period_samples - 64.0) < 0.5);
        CHECK(std::abs(v.clock_hz - 48000.0) < 500.0);
        CHECK(v.interference_score < 1e-9);
        CHECK(v.attempts == 1);
        CHECK_FALSE(v.interference_unresolved);
        CHECK(std::abs(v.aoa_error_deg) < 0.5);
        CHECK(v.snr_db > 40.0);
        CHECK(v.solver_converged);
    }
    REQUIRE(rep.has_localization);
    CHECK(rep.localization_error_m < 1e-3);
    CHECK(rep.localization.n_bearings == 2);
}

TEST_CASE("reports are byte-identical across repeated runs") {
    const Scenario sc = parse_scenario_text(
        replace_once(base_text(), "power = 0", "power = 0.05"), "inline");

    TempDir d1("rep1"), d2("rep2");
    write_report(run_scenario(sc), d1.path.string());
    write_report(run_scenario(sc), d2.path.string());

    const std::string v1 = slurp(d1.path / "vantages.csv");
    CHECK(v1 == slurp(d2.path / "vantages.csv"));
    CHECK(slurp(d1.path / "localization.csv") == slurp(d2.path / "localization.csv"));

    CHECK(v1.rfind("vantage,clock_period_samples,clock_hz,clock_confidence_db,snr_db,"
                   "tau_samples,interference_score,attempts,interference_unresolved,"
                   "aoa_est_deg,aoa_true_deg,aoa_error_deg,bearing_deg,weight_mag,"
                   "n_paths,solver_iters,solver_residual,solver_converged\n",
                   0) == 0);
    CHECK(slurp(d1.path / "localization.csv")
              .rfind("status,x_m,y_m,residual_m,n_bearings,condition,error_m\n", 0) == 0);
}

TEST_CASE("an interferer with no retry budget leaves the run unresolved") {
    std::string text = replace_once(base_text(), "retries = 1", "retries = 0");
    text = replace_once(text, "n_sweeps = 4", "n_sweeps = 2");
    // drop the second vantage; this test only watches the retry policy
    text = replace_once(text, "[vantage.2]\nposition_m = 5, 0\nheading_deg = 135\n", "");
    text += R"(
[interferer.1]
clock_hz = 51200
amplitude = 0.4
position_m = 4, 0.5
baseband_offset_hz = 12000
)";
    const Scenario sc = parse_scenario_text(text, "inline");
    const Report rep = run_scenario(sc);

    REQUIRE(rep.vantages.size() == 1);
    CHECK(rep.vantages[0].interference_unresolved);
    CHECK(rep.vantages[0].interference_score > sc.interference_threshold);
    CHECK(rep.vantages[0].attempts == 1);
    CHECK(rep.status == RunStatus::interference_unresolved);
    CHECK(static_cast<int>(rep.status) == 4);
    CHECK_FALSE(rep.has_localization);
}

TEST_CASE("a retry budget clears transient interference") {
    // the same interferer, but gated to be active only part of the time:
    // with retries available, a later chunk of sweeps passes the check
    std::string text = replace_once(base_text(), "n_packets = 2", "n_packets = 1");
    text = replace_once(text, "retries = 1", "retries = 5");
    text = replace_once(text, "n_sweeps = 4", "n_sweeps = 6");
    text += R"(
[interferer.1]
clock_hz = 51200
amplitude = 0.4
position_m = 4, 0.5
baseband_offset_hz = 12000
activity_period_s = 0.08
activity_duty = 0.2
)";
    // active for the first 49152 samples only: sweeps 0 and part of 1 are
    // polluted, sweeps 2..5 are clean, so a retry must succeed
    const Scenario sc = parse_scenario_text(text, "inline");
    const Report rep = run_scenario(sc);
    REQUIRE(rep.vantages.size() == 2);
    for (const VantageOutcome& v : rep.vantages) {
        CHECK_FALSE(v.interference_unresolved);
        CHECK(v.interference_score <= sc.interference_threshold);
    }
    CHECK(rep.status == RunStatus::ok);
}

TEST_CASE("sweep rows cover the value-seed grid in order") {
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const std::vector<double> betas{0.5, 2.0};
    const auto rows = run_sweep(sc, SweepAxis::beta, betas, 2, 2);

    REQUIRE(rows.size() == 4);
    CHECK(rows[0].axis_value == 0.5);
    CHECK(rows[1].axis_value == 0.5);
    CHECK(rows[2].axis_value == 2.0);
    CHECK(rows[3].axis_value == 2.0);
    CHECK(rows[0].seed != rows[1].seed);
    for (const SweepRow& r : rows) {
        CHECK(std::isfinite(r.aoa_error_deg));
        CHECK(std::isfinite(r.loc_error_m));
        CHECK(r.loc_error_m < 0.01);
    }
    // same point index, same derived seed, regardless of axis
    const auto again = run_sweep(sc, SweepAxis::beta, betas, 2, 1);
    REQUIRE(again.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(again[i].seed == rows[i].seed);
        CHECK(again[i].aoa_error_deg == rows[i].aoa_error_deg);
    }
}

TEST_CASE("the range sweep axis requires a single vantage") {
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const std::vector<double> r{1.0, 2.0};
    CHECK_THROWS_AS(run_sweep(sc, SweepAxis::range, r, 1), ValidationError);
}

TEST_CASE("sweep axis names round trip") {
    for (const auto axis :
         {SweepAxis::beta, SweepAxis::range, SweepAxis::packets, SweepAxis::tau})
        CHECK(sweep_axis_from_string(to_string(axis)) == axis);
    CHECK_THROWS_AS(sweep_axis_from_string("volume"), ValidationError);
}

TEST_CASE("sweep csv has the documented header and row count") {
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const std::vector<double> taus{0.0, 64.0};
    const auto rows = run_sweep(sc, SweepAxis::tau, taus, 1, 2);

    TempDir d("sweep");
    const auto file = d.path / "nested" / "sweep.csv";
    write_sweep_csv(file.string(), rows);
    const std::string text = slurp(file);
    CHECK(text.rfind("axis_value,seed,aoa_error_deg,loc_error_m,snr_db,iters\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("packets sweep raises the sweep budget as needed") {
    // n_packets = 8 with the base retry budget needs 16 sweeps; the sweep
    // must lift n_sweeps internally instead of failing validation
    const Scenario sc = parse_scenario_text(base_text(), "inline");
    const std::vector<double> pk{8.0};
    const auto rows = run_sweep(sc, SweepAxis::packets, pk, 1, 1);
    REQUIRE(rows.size() == 1);
    CHECK(std::isfinite(rows[0].aoa_error_deg));
}
