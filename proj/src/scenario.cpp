// SPDX-License-Identifier: Apache-2.0
#include "emadir/scenario.hpp"

#include "emadir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace emadir {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// One parsed section; tracks which keys were consumed so leftovers can be
// reported by name.
struct Section {
    std::string name;
    std::map<std::string, std::string> values;
    mutable std::map<std::string, bool> used;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values.find(key);
        if (it == values.end())
            return fallback;
        used[key] = true;
        return it->second;
    }

    std::string require(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end())
            throw ValidationError("scenario: missing required key " + name + "." + key);
        used[key] = true;
        return it->second;
    }

    double get_num(const std::string& key, double fallback) const {
        if (!has(key))
            return fallback;
        return parse_num(key, get(key, ""));
    }

    double require_num(const std::string& key) const { return parse_num(key, require(key)); }

    std::size_t get_count(const std::string& key, std::size_t fallback) const {
        if (!has(key))
            return fallback;
        const double v = parse_num(key, get(key, ""));
        if (v < 0.0 || v != std::floor(v) || v > 9e15)
            throw ValidationError("scenario: " + name + "." + key +
                                  " must be a nonnegative integer, got " + values.at(key));
        return static_cast<std::size_t>(v);
    }

    std::array<double, 2> require_pair(const std::string& key) const {
        const std::string raw = require(key);
        const auto comma = raw.find(',');
        if (comma == std::string::npos)
            throw ValidationError("scenario: " + name + "." + key +
                                  " must be two comma-separated numbers, got " + raw);
        return {parse_num(key, trim(raw.substr(0, comma))),
                parse_num(key, trim(raw.substr(comma + 1)))};
    }

    void check_all_used() const {
        for (const auto& [k, v] : values)
            if (!used.count(k))
                throw ValidationError("scenario: unknown key " + name + "." + k);
    }

  private:
    double parse_num(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (trim(raw.substr(pos)).empty() && std::isfinite(v))
                return v;
        } catch (const std::exception&) {
        }
        throw ValidationError("scenario: " + name + "." + key + " has invalid numeric value `" +
                              raw + "`");
    }
};

EmanationSource parse_source_fields(const Section& sec) {
    EmanationSource src;
    src.clock_hz = sec.require_num("clock_hz");
    src.duty = sec.get_num("duty", 0.5);
    src.amplitude = sec.get_num("amplitude", 1.0);
    src.position_m = sec.require_pair("position_m");
    src.activity_period_s = sec.get_num("activity_period_s", 0.0);
    src.activity_duty = sec.get_num("activity_duty", 1.0);
    return src;
}

std::vector<Path> parse_paths(const Section& sec, const std::string& key) {
    // aoa_deg:gain_re:gain_im entries separated by `;`
    std::vector<Path> paths;
    const std::string raw = sec.get(key, "");
    std::stringstream ss(raw);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
        entry = trim(entry);
        if (entry.empty())
            continue;
        double aoa = 0.0, re = 0.0, im = 0.0;
        char c1 = 0, c2 = 0;
        std::stringstream es(entry);
        if (!(es >> aoa >> c1 >> re >> c2 >> im) || c1 != ':' || c2 != ':')
            throw ValidationError("scenario: " + sec.name + "." + key +
                                  " entries must be aoa_deg:gain_re:gain_im, got `" + entry +
                                  "`");
        paths.push_back({aoa * kPi / 180.0, {re, im}});
    }
    return paths;
}

} // namespace

SwitchSchedule Scenario::schedule() const {
    SwitchSchedule sch;
    sch.n_antennas = array.n_switched;
    sch.dwell_samples = dwell_samples;
    sch.guard_samples = guard_samples;
    if (order.empty()) {
        sch.order.resize(array.n_switched);
        for (std::size_t i = 0; i < array.n_switched; ++i)
            sch.order[i] = i;
    } else {
        sch.order = order;
    }
    return sch;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    std::map<std::string, Section> sections;
    {
        std::stringstream ss(text);
        std::string line;
        std::string current;
        std::size_t lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#')
                continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ValidationError("scenario: " + origin + " line " +
                                          std::to_string(lineno) + ": unterminated section header");
                current = trim(t.substr(1, t.size() - 2));
                if (current.empty())
                    throw ValidationError("scenario: " + origin + " line " +
                                          std::to_string(lineno) + ": empty section name");
                if (sections.count(current))
                    throw ValidationError("scenario: duplicate section [" + current + "]");
                sections[current].name = current;
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos || current.empty())
                throw ValidationError("scenario: " + origin + " line " + std::to_string(lineno) +
                                      ": expected `key = value` inside a section, got `" + t +
                                      "`");
            const std::string key = trim(t.substr(0, eq));
            if (sections[current].values.count(key))
                throw ValidationError("scenario: duplicate key " + current + "." + key);
            sections[current].values[key] = trim(t.substr(eq + 1));
        }
    }

    auto section = [&](const std::string& name) -> const Section* {
        auto it = sections.find(name);
        return it == sections.end() ? nullptr : &it->second;
    };

    Scenario sc;

    const Section* src_sec = section("source");
    if (src_sec == nullptr)
        throw ValidationError("scenario: missing required section [source]");
    sc.source = parse_source_fields(*src_sec);

    if (const Section* arr = section("array")) {
        sc.array.n_switched = arr->get_count("n_switched", sc.array.n_switched);
        sc.array.spacing_m = arr->get_num("spacing_m", sc.array.spacing_m);
        sc.array.carrier_wavelength_m =
            arr->get_num("carrier_wavelength_m", sc.array.carrier_wavelength_m);
        sc.fs = arr->get_num("fs", sc.fs);
        sc.dwell_samples = arr->get_count("dwell_samples", sc.dwell_samples);
        sc.guard_samples = arr->get_count("guard_samples", sc.guard_samples);
        if (arr->has("order")) {
            std::stringstream ss(arr->get("order", ""));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    sc.order.push_back(static_cast<std::size_t>(std::stoull(trim(tok))));
                } catch (const std::exception&) {
                    throw ValidationError("scenario: array.order has invalid entry `" + trim(tok) +
                                          "`");
                }
            }
        }
    }

    if (const Section* noi = section("noise")) {
        sc.noise.power = noi->get_num("power", 0.0);
        sc.noise.rho = noi->get_num("rho", 0.0);
    }

    if (const Section* est = section("estimator")) {
        const std::string policy = est->get("tau_policy", "period");
        if (policy == "period")
            sc.tau_policy = TauPolicy::period;
        else if (policy == "fixed")
            sc.tau_policy = TauPolicy::fixed;
        else if (policy == "none")
            sc.tau_policy = TauPolicy::none;
        else
            throw ValidationError(
                "scenario: estimator.tau_policy must be period, fixed or none, got `" + policy +
                "`");
        sc.tau_fixed = est->get_count("tau_fixed", 0);
        sc.n_packets = est->get_count("n_packets", sc.n_packets);
        sc.retries = est->get_count("retries", sc.retries);
        sc.interference_threshold =
            est->get_num("interference_threshold", sc.interference_threshold);
        sc.snr_offsets = est->get_count("snr_offsets", sc.snr_offsets);
        sc.clock_min_period = est->get_count("clock_min_period", sc.clock_min_period);
        sc.clock_max_period = est->get_count("clock_max_period", sc.clock_max_period);
    }

    if (const Section* sol = section("solver")) {
        const std::string method = sol->get("method", "sparse");
        if (method == "sparse")
            sc.method = AoAMethod::sparse;
        else if (method == "joint")
            sc.method = AoAMethod::joint;
        else if (method == "music")
            sc.method = AoAMethod::music;
        else if (method == "spotfi")
            sc.method = AoAMethod::spotfi;
        else if (method == "ifft")
            sc.method = AoAMethod::ifft;
        else
            throw ValidationError(
                "scenario: solver.method must be sparse, joint, music, spotfi or ifft, got `" +
                method + "`");
        sc.beta = sol->get_num("beta", sc.beta);
        sc.grid_size = sol->get_count("grid_size", sc.grid_size);
        sc.lambda_group = sol->get_num("lambda_group", sc.lambda_group);
        sc.rel_threshold = sol->get_num("rel_threshold", sc.rel_threshold);
        sc.joint_harmonics = sol->get_count("joint_harmonics", sc.joint_harmonics);
        sc.solve_opts.tol = sol->get_num("tol", sc.solve_opts.tol);
        sc.solve_opts.max_iters = sol->get_count("max_iters", sc.solve_opts.max_iters);
        sc.solve_opts.squared_residual =
            sol->get_count("squared_residual", sc.solve_opts.squared_residual ? 1 : 0) != 0;
        sc.solve_opts.polish = sol->get_count("polish", sc.solve_opts.polish ? 1 : 0) != 0;
    }

    if (const Section* run = section("run")) {
        const double seed = run->get_num("seed", 1.0);
        if (seed < 0.0 || seed != std::floor(seed))
            throw ValidationError("scenario: run.seed must be a nonnegative integer");
        sc.seed = static_cast<std::uint64_t>(seed);
        sc.n_sweeps = run->get_count("n_sweeps", sc.n_sweeps);
        sc.out_dir = run->get("out", sc.out_dir);
    }

    // Numbered sections must be contiguous from 1.
    for (std::size_t i = 1;; ++i) {
        const Section* sec = section("interferer." + std::to_string(i));
        if (sec == nullptr)
            break;
        InterfererConfig cfg;
        cfg.source = parse_source_fields(*sec);
        cfg.baseband_offset_hz = sec->get_num("baseband_offset_hz", 0.0);
        cfg.phase0 = sec->get_num("phase0", 0.0);
        sc.interferers.push_back(cfg);
    }
    for (std::size_t i = 1;; ++i) {
        const Section* sec = section("vantage." + std::to_string(i));
        if (sec == nullptr)
            break;
        VantageConfig v;
        v.position_m = sec->require_pair("position_m");
        v.heading_deg = sec->require_num("heading_deg");
        v.extra_paths = parse_paths(*sec, "extra_paths");
        sc.vantages.push_back(v);
    }

    for (const auto& [name, sec] : sections) {
        const bool known =
            name == "source" || name == "array" || name == "noise" || name == "estimator" ||
            name == "solver" || name == "run" ||
            (name.rfind("interferer.", 0) == 0 &&
             [&] {
                 const std::string idx = name.substr(11);
                 try {
                     const std::size_t i = std::stoull(idx);
                     return i >= 1 && i <= sc.interferers.size();
                 } catch (const std::exception&) {
                     return false;
                 }
             }()) ||
            (name.rfind("vantage.", 0) == 0 && [&] {
                const std::string idx = name.substr(8);
                try {
                    const std::size_t i = std::stoull(idx);
                    return i >= 1 && i <= sc.vantages.size();
                } catch (const std::exception&) {
                    return false;
                }
            }());
        if (!known)
            throw ValidationError("scenario: unknown or non-contiguous section [" + name + "]");
        sec.check_all_used();
    }

    validate(sc);
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("scenario: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

void validate(const Scenario& sc) {
    validate(sc.source);
    validate(sc.array);
    validate(sc.noise);
    if (!(sc.fs > 0.0))
        throw ValidationError("scenario: array.fs must be positive");
    validate(sc.schedule()); // checks dwell/guard/order against n_switched

    if (sc.vantages.empty())
        throw ValidationError("scenario: at least one [vantage.N] section is required");
    for (std::size_t i = 0; i < sc.vantages.size(); ++i) {
        const VantageConfig& v = sc.vantages[i];
        const std::string name = "vantage." + std::to_string(i + 1);
        if (!std::isfinite(v.position_m[0]) || !std::isfinite(v.position_m[1]) ||
            !std::isfinite(v.heading_deg))
            throw ValidationError("scenario: " + name + " has non-finite fields");
        const double bearing = std::atan2(sc.source.position_m[1] - v.position_m[1],
                                          sc.source.position_m[0] - v.position_m[0]);
        double local = bearing - v.heading_deg * kPi / 180.0;
        while (local > kPi)
            local -= 2.0 * kPi;
        while (local < -kPi)
            local += 2.0 * kPi;
        if (std::abs(local) >= kPi / 2.0)
            throw ValidationError("scenario: " + name +
                                  ".heading_deg leaves the source outside the forward "
                                  "half-plane (local angle " +
                                  std::to_string(local * 180.0 / kPi) + " deg)");
        for (const Path& p : v.extra_paths)
            if (!std::isfinite(p.aoa_rad) || std::abs(p.aoa_rad) > kPi / 2.0)
                throw ValidationError("scenario: " + name +
                                      ".extra_paths angles must lie in (-90, 90) deg");
    }
    for (std::size_t j = 0; j < sc.interferers.size(); ++j)
        validate(sc.interferers[j].source);

    if (sc.tau_policy == TauPolicy::fixed && sc.tau_fixed == 0)
        throw ValidationError("scenario: estimator.tau_fixed must be positive when "
                              "estimator.tau_policy = fixed");
    if (sc.n_packets == 0)
        throw ValidationError("scenario: estimator.n_packets must be at least 1");
    if (sc.snr_offsets == 0)
        throw ValidationError("scenario: estimator.snr_offsets must be at least 1");
    if (!(sc.interference_threshold >= 0.0))
        throw ValidationError("scenario: estimator.interference_threshold must be nonnegative");
    if (sc.clock_min_period < 2 || sc.clock_max_period < sc.clock_min_period)
        throw ValidationError("scenario: estimator clock period search range is invalid");

    const std::size_t needed = sc.n_packets * (sc.retries + 1);
    if (sc.n_sweeps < needed)
        throw ValidationError("scenario: run.n_sweeps = " + std::to_string(sc.n_sweeps) +
                              " is below estimator.n_packets * (retries + 1) = " +
                              std::to_string(needed));

    if (!(sc.beta >= 0.0))
        throw ValidationError("scenario: solver.beta must be nonnegative");
    if (!(sc.lambda_group >= 0.0))
        throw ValidationError("scenario: solver.lambda_group must be nonnegative");
    if (!(sc.rel_threshold > 0.0) || sc.rel_threshold >= 1.0)
        throw ValidationError("scenario: solver.rel_threshold must lie in (0, 1)");
    if (sc.grid_size < 4 * (sc.array.n_switched + 1))
        throw ValidationError("scenario: solver.grid_size must be at least 4 * (n_switched + 1)");
    if (sc.method == AoAMethod::joint && sc.joint_harmonics == 0)
        throw ValidationError("scenario: solver.joint_harmonics must be at least 1");
    if (sc.array.d_over_lambda() >= 0.5)
        throw ValidationError("scenario: array spacing must stay below half a wavelength "
                              "(d/lambda = " +
                              std::to_string(sc.array.d_over_lambda()) + ")");
}

} // namespace emadir
