// SPDX-License-Identifier: Apache-2.0
#include "emadir/capture.hpp"

#include "emadir/errors.hpp"
#include "emadir/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace emadir {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

void validate(const SwitchSchedule& schedule) {
    if (schedule.n_antennas == 0)
        throw ValidationError("SwitchSchedule: n_antennas must be at least 1");
    if (schedule.dwell_samples == 0)
        throw ValidationError("SwitchSchedule: dwell_samples must be positive");
    if (schedule.guard_samples >= schedule.dwell_samples)
        throw ValidationError("SwitchSchedule: guard_samples " +
                              std::to_string(schedule.guard_samples) +
                              " must be below dwell_samples " +
                              std::to_string(schedule.dwell_samples));
    if (schedule.order.size() != schedule.n_antennas)
        throw ValidationError("SwitchSchedule: order has " + std::to_string(schedule.order.size()) +
                              " entries, expected n_antennas = " +
                              std::to_string(schedule.n_antennas));
    std::vector<bool> seen(schedule.n_antennas, false);
    for (std::size_t p : schedule.order) {
        if (p >= schedule.n_antennas || seen[p])
            throw ValidationError("SwitchSchedule: order must be a permutation of 0.." +
                                  std::to_string(schedule.n_antennas - 1));
        seen[p] = true;
    }
}

void validate(const IQCapture& cap) {
    if (!(cap.fs > 0.0))
        throw ValidationError("IQCapture: fs must be positive");
    validate(cap.schedule);
    if (cap.packet_len_samples != cap.schedule.packet_len_samples())
        throw ValidationError("IQCapture: packet_len_samples " +
                              std::to_string(cap.packet_len_samples) +
                              " does not equal n_antennas * dwell_samples = " +
                              std::to_string(cap.schedule.packet_len_samples()));
    if (cap.ref_stream.size() != cap.switched_stream.size())
        throw ValidationError("IQCapture: ref stream has " + std::to_string(cap.ref_stream.size()) +
                              " samples but switched stream has " +
                              std::to_string(cap.switched_stream.size()));
    if (cap.ref_stream.empty() || cap.ref_stream.size() % cap.packet_len_samples != 0)
        throw ValidationError("IQCapture: stream length " + std::to_string(cap.ref_stream.size()) +
                              " is not a positive whole number of sweeps of " +
                              std::to_string(cap.packet_len_samples) + " samples");
}

IQCapture simulate_capture(const EmanationSource& src, const ArrayGeometry& geom,
                           const PathSet& paths, const NoiseModel& noise,
                           const SwitchSchedule& schedule, double fs, std::size_t n_sweeps,
                           std::span<const InterferenceSource> interferers,
                           double source_phase0) {
    validate(geom);
    validate(noise);
    validate(schedule);
    if (schedule.n_antennas != geom.n_switched)
        throw ValidationError("simulate_capture: schedule covers " +
                              std::to_string(schedule.n_antennas) +
                              " antennas but geometry has n_switched = " +
                              std::to_string(geom.n_switched));
    if (n_sweeps == 0)
        throw ValidationError("simulate_capture: n_sweeps must be at least 1");

    const std::vector<std::complex<double>> h = true_relative_channel(geom, paths);
    const std::size_t total = n_sweeps * schedule.packet_len_samples();

    const cvec s = synthesize(src, fs, total, source_phase0);

    std::vector<cvec> d(interferers.size());
    for (std::size_t j = 0; j < interferers.size(); ++j) {
        const InterferenceSource& intf = interferers[j];
        if (intf.alpha.size() != geom.n_switched)
            throw ValidationError("simulate_capture: interferer " + std::to_string(j) +
                                  " has " + std::to_string(intf.alpha.size()) +
                                  " alpha entries, expected " + std::to_string(geom.n_switched));
        d[j] = synthesize(intf.source, fs, total, intf.phase0);
        if (intf.baseband_offset_hz != 0.0) {
            const double w = 2.0 * kPi * intf.baseband_offset_hz / fs;
            for (std::size_t t = 0; t < total; ++t)
                d[j][t] *= std::complex<double>(std::cos(w * static_cast<double>(t)),
                                                std::sin(w * static_cast<double>(t)));
        }
    }

    IQCapture cap;
    cap.fs = fs;
    cap.schedule = schedule;
    cap.packet_len_samples = schedule.packet_len_samples();
    cap.ref_stream.resize(total);
    cap.switched_stream.resize(total);

    const bool noisy = noise.power > 0.0;
    const double amp = std::sqrt(noise.power);
    const double sc = std::sqrt(noise.rho);
    const double sp = std::sqrt(1.0 - noise.rho);

    // Stream layout mirrors generate_correlated_noise: derive(seed, 0) is the
    // common component, derive(seed, 1) the reference private stream, and
    // derive(seed, 1 + a) the private stream of switched element a. Private
    // streams of unselected antennas are never observed, so they are not
    // materialized.
    cvec common;
    Rng ref_rng(Rng::derive(noise.seed, 1));
    std::vector<Rng> ant_rng;
    if (noisy) {
        Rng common_rng(Rng::derive(noise.seed, 0));
        common.resize(total);
        for (auto& v : common)
            v = common_rng.cgaussian();
        ant_rng.reserve(geom.n_switched);
        for (std::size_t a = 1; a <= geom.n_switched; ++a)
            ant_rng.emplace_back(Rng::derive(noise.seed, 1 + a));
    }

    for (std::size_t t = 0; t < total; ++t) {
        const std::size_t p = schedule.order[(t / schedule.dwell_samples) % schedule.n_antennas];
        std::complex<double> ref = s[t];
        std::complex<double> sw = h[p + 1] * s[t];
        for (std::size_t j = 0; j < d.size(); ++j) {
            ref += d[j][t];
            sw += interferers[j].alpha[p] * d[j][t];
        }
        if (noisy) {
            ref += amp * (sc * common[t] + sp * ref_rng.cgaussian());
            sw += amp * (sc * common[t] + sp * ant_rng[p].cgaussian());
        }
        cap.ref_stream[t] = ref;
        cap.switched_stream[t] = sw;
    }
    return cap;
}

std::vector<Packet> packetize(const IQCapture& cap) {
    validate(cap);
    const SwitchSchedule& sch = cap.schedule;
    const std::size_t usable = sch.dwell_samples - sch.guard_samples;

    std::vector<Packet> packets(cap.n_sweeps());
    for (std::size_t sweep = 0; sweep < packets.size(); ++sweep) {
        Packet& pkt = packets[sweep];
        pkt.sweep_index = sweep;
        pkt.fs = cap.fs;
        pkt.segments.resize(sch.n_antennas);
        for (std::size_t pos = 0; pos < sch.n_antennas; ++pos) {
            const std::size_t start =
                sweep * cap.packet_len_samples + pos * sch.dwell_samples + sch.guard_samples;
            Packet::Segment& seg = pkt.segments[pos];
            seg.antenna = sch.order[pos] + 1;
            seg.switched.assign(cap.switched_stream.begin() + static_cast<std::ptrdiff_t>(start),
                                cap.switched_stream.begin() +
                                    static_cast<std::ptrdiff_t>(start + usable));
            seg.reference.assign(cap.ref_stream.begin() + static_cast<std::ptrdiff_t>(start),
                                 cap.ref_stream.begin() +
                                     static_cast<std::ptrdiff_t>(start + usable));
        }
    }
    return packets;
}

namespace {

void write_f32le(std::ofstream& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff),
                           static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

void write_stream(const std::string& path, const cvec& stream) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("write_capture: cannot open " + path);
    for (const auto& v : stream) {
        write_f32le(out, static_cast<float>(v.real()));
        write_f32le(out, static_cast<float>(v.imag()));
    }
    if (!out)
        throw IoError("write_capture: write failed for " + path);
}

cvec read_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("read_capture: cannot open " + path);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % 8 != 0)
        throw ValidationError("read_capture: " + path + " holds " + std::to_string(raw.size()) +
                              " bytes, not a whole number of complex float32 samples");
    cvec stream(raw.size() / 8);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        std::uint32_t re = 0;
        std::uint32_t im = 0;
        for (int b = 3; b >= 0; --b) {
            re = (re << 8) | static_cast<std::uint8_t>(raw[i * 8 + static_cast<std::size_t>(b)]);
            im = (im << 8) |
                 static_cast<std::uint8_t>(raw[i * 8 + 4 + static_cast<std::size_t>(b)]);
        }
        stream[i] = std::complex<double>(std::bit_cast<float>(re), std::bit_cast<float>(im));
    }
    return stream;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

void write_capture(const IQCapture& cap, const std::string& path_prefix) {
    validate(cap);
    write_stream(path_prefix + ".ref.iq", cap.ref_stream);
    write_stream(path_prefix + ".sw.iq", cap.switched_stream);

    std::ofstream meta(path_prefix + ".meta", std::ios::trunc);
    if (!meta)
        throw IoError("write_capture: cannot open " + path_prefix + ".meta");
    char fsbuf[64];
    std::snprintf(fsbuf, sizeof(fsbuf), "%.17g", cap.fs);
    meta << "fs = " << fsbuf << "\n";
    meta << "n_antennas = " << cap.schedule.n_antennas << "\n";
    meta << "dwell_samples = " << cap.schedule.dwell_samples << "\n";
    meta << "guard_samples = " << cap.schedule.guard_samples << "\n";
    meta << "order = ";
    for (std::size_t i = 0; i < cap.schedule.order.size(); ++i)
        meta << (i ? "," : "") << cap.schedule.order[i];
    meta << "\n";
    meta << "packet_len = " << cap.packet_len_samples << "\n";
    if (!meta)
        throw IoError("write_capture: write failed for " + path_prefix + ".meta");
}

IQCapture read_capture(const std::string& path_prefix) {
    std::ifstream meta(path_prefix + ".meta");
    if (!meta)
        throw IoError("read_capture: cannot open " + path_prefix + ".meta");

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::pair<std::string, std::string>> kv;
    while (std::getline(meta, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("read_capture: " + path_prefix + ".meta line " +
                                  std::to_string(lineno) + " is not `key = value`: " + t);
        kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }

    auto get = [&](const std::string& key) -> const std::string& {
        for (const auto& [k, v] : kv)
            if (k == key)
                return v;
        throw ValidationError("read_capture: " + path_prefix + ".meta is missing key `" + key +
                              "`");
    };
    auto get_count = [&](const std::string& key) -> std::size_t {
        const std::string& v = get(key);
        try {
            const long long n = std::stoll(v);
            if (n < 0)
                throw std::out_of_range(v);
            return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
            throw ValidationError("read_capture: key `" + key + "` has invalid count value `" +
                                  v + "`");
        }
    };

    IQCapture cap;
    try {
        cap.fs = std::stod(get("fs"));
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError("read_capture: key `fs` has invalid value `" + get("fs") + "`");
    }

    cap.schedule.n_antennas = get_count("n_antennas");
    cap.schedule.dwell_samples = get_count("dwell_samples");
    cap.schedule.guard_samples = get_count("guard_samples");
    cap.packet_len_samples = get_count("packet_len");

    cap.schedule.order.clear();
    std::stringstream order_ss(get("order"));
    std::string tok;
    while (std::getline(order_ss, tok, ',')) {
        tok = trim(tok);
        try {
            cap.schedule.order.push_back(static_cast<std::size_t>(std::stoull(tok)));
        } catch (const std::exception&) {
            throw ValidationError("read_capture: key `order` has invalid entry `" + tok + "`");
        }
    }

    cap.ref_stream = read_stream(path_prefix + ".ref.iq");
    cap.switched_stream = read_stream(path_prefix + ".sw.iq");
    if (cap.ref_stream.size() != cap.switched_stream.size())
        throw ValidationError("read_capture: stream length mismatch, " + path_prefix +
                              ".ref.iq has " + std::to_string(cap.ref_stream.size()) +
                              " samples but " + path_prefix + ".sw.iq has " +
                              std::to_string(cap.switched_stream.size()));
    validate(cap); // names expected vs found counts on truncation
    return cap;
}

} // namespace emadir
