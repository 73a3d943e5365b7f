#include "nilm/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include "nilm/errors.hpp"

namespace nilm {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kMaxForwardFill = 20;

std::string basename_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) {
        name.resize(dot);
    }
    return name;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::int64_t parse_int(std::string_view field, const std::string& where) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(where + ": bad integer '" + std::string(field) + "'");
    }
    return value;
}

double parse_double(std::string_view field, const std::string& where) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(where + ": bad number '" + std::string(field) + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError(where + ": non-finite value");
    }
    return value;
}

struct RawChannel {
    std::string label;
    std::vector<PowerSample> samples;
    std::size_t clamped = 0;
};

RawChannel read_two_column_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    RawChannel channel;
    channel.label = basename_stem(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        const std::size_t split = body.find_first_of(" \t");
        if (split == std::string_view::npos) {
            throw ParseError(where + ": expected '<timestamp> <watts>'");
        }
        const std::int64_t ts = parse_int(trim(body.substr(0, split)), where);
        double watts = parse_double(trim(body.substr(split + 1)), where);
        if (watts < 0.0) {
            watts = 0.0;
            ++channel.clamped;
        }
        if (!channel.samples.empty() && ts <= channel.samples.back().timestamp) {
            throw ParseError(where + ": timestamp does not increase");
        }
        channel.samples.push_back({ts, watts});
    }
    if (channel.samples.empty()) {
        throw ParseError(path + ": no samples");
    }
    return channel;
}

// Exact 1 Hz grid: holes of at most kMaxForwardFill seconds repeat the last
// reading; longer holes remain as timestamp jumps.
std::vector<PowerSample> resample_1hz(const std::vector<PowerSample>& raw) {
    std::vector<PowerSample> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i > 0) {
            const std::int64_t prev = raw[i - 1].timestamp;
            const std::int64_t step = raw[i].timestamp - prev;
            if (step > 1 && step <= kMaxForwardFill) {
                for (std::int64_t t = prev + 1; t < raw[i].timestamp; ++t) {
                    out.push_back({t, raw[i - 1].power});
                }
            }
        }
        out.push_back(raw[i]);
    }
    return out;
}

}  // namespace

GroundTruthTrace load_channel_files(const std::vector<std::string>& paths,
                                    const std::vector<std::size_t>& channel_selection) {
    if (channel_selection.empty()) {
        throw ConfigError("channel selection is empty");
    }
    for (std::size_t idx : channel_selection) {
        if (idx >= paths.size()) {
            throw ConfigError("channel index " + std::to_string(idx) + " out of range (" +
                              std::to_string(paths.size()) + " files)");
        }
    }

    GroundTruthTrace trace;
    std::vector<std::vector<PowerSample>> channels;
    for (std::size_t idx : channel_selection) {
        RawChannel raw = read_two_column_file(paths[idx]);
        trace.clamped_negative_readings += raw.clamped;
        channels.push_back(resample_1hz(raw.samples));
        trace.per_appliance.push_back({std::move(raw.label), {}});
    }

    std::int64_t lo = channels[0].front().timestamp;
    std::int64_t hi = channels[0].back().timestamp;
    for (const auto& ch : channels) {
        lo = std::max(lo, ch.front().timestamp);
        hi = std::min(hi, ch.back().timestamp);
    }
    if (lo > hi) {
        throw InputError("selected channels have no overlapping time range");
    }

    std::vector<std::size_t> cursor(channels.size(), 0);
    bool in_gap = false;
    std::int64_t gap_start = 0;
    for (std::int64_t ts = lo; ts <= hi; ++ts) {
        bool all_present = true;
        double total = 0.0;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            auto& pos = cursor[c];
            while (pos < channels[c].size() && channels[c][pos].timestamp < ts) {
                ++pos;
            }
            if (pos < channels[c].size() && channels[c][pos].timestamp == ts) {
                total += channels[c][pos].power;
            } else {
                all_present = false;
            }
        }
        if (!all_present) {
            if (!in_gap) {
                in_gap = true;
                gap_start = trace.samples.empty() ? lo : trace.samples.back().timestamp;
            }
            continue;
        }
        if (in_gap) {
            in_gap = false;
            trace.gaps.push_back({gap_start, ts});
        }
        trace.samples.push_back({ts, total});
        for (std::size_t c = 0; c < channels.size(); ++c) {
            trace.per_appliance[c].samples.push_back(channels[c][cursor[c]]);
        }
    }
    if (trace.samples.empty()) {
        throw InputError("selected channels never overlap sample-for-sample");
    }
    return trace;
}

GroundTruthTrace generate_synthetic(const std::vector<ApplianceSpec>& specs,
                                    int days, std::uint64_t seed) {
    if (days < 1) {
        throw ConfigError("days must be >= 1");
    }
    if (specs.empty()) {
        throw ConfigError("appliance spec list is empty");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const std::string where = "spec[" + std::to_string(i) + "]";
        if (specs[i].label.empty()) {
            throw ConfigError(where + ".label: empty");
        }
        if (specs[i].label.find(',') != std::string::npos) {
            throw ConfigError(where + ".label: must not contain ','");
        }
        if (!(specs[i].on_power > 0.0)) {
            throw ConfigError(where + ".on_power: must be > 0");
        }
        if (!(specs[i].mean_on_duration >= 1.0)) {
            throw ConfigError(where + ".mean_on_duration: must be >= 1");
        }
        if (specs[i].activations_per_day < 0.0) {
            throw ConfigError(where + ".activations_per_day: must be >= 0");
        }
        if (specs[i].noise_stddev < 0.0) {
            throw ConfigError(where + ".noise_stddev: must be >= 0");
        }
    }

    const std::int64_t total_seconds = static_cast<std::int64_t>(days) * kSecondsPerDay;
    std::mt19937_64 rng(seed);

    GroundTruthTrace trace;
    trace.samples.resize(static_cast<std::size_t>(total_seconds));
    for (std::int64_t t = 0; t < total_seconds; ++t) {
        trace.samples[static_cast<std::size_t>(t)].timestamp = t;
    }

    double noise_var = 0.0;
    for (const ApplianceSpec& spec : specs) {
        std::vector<char> on(static_cast<std::size_t>(total_seconds), 0);
        std::exponential_distribution<double> duration_dist(1.0 / spec.mean_on_duration);
        for (int day = 0; day < days; ++day) {
            int count = 0;
            if (spec.activations_per_day > 0.0) {
                std::poisson_distribution<int> count_dist(spec.activations_per_day);
                count = count_dist(rng);
            }
            const std::int64_t day_start = static_cast<std::int64_t>(day) * kSecondsPerDay;
            std::uniform_int_distribution<std::int64_t> start_dist(day_start,
                                                                   day_start + kSecondsPerDay - 1);
            for (int k = 0; k < count; ++k) {
                const std::int64_t start = start_dist(rng);
                const std::int64_t duration =
                    std::max<std::int64_t>(1, std::llround(duration_dist(rng)));
                const std::int64_t end = std::min(total_seconds, start + duration);
                std::fill(on.begin() + start, on.begin() + end, char{1});
            }
        }
        ApplianceChannel channel;
        channel.label = spec.label;
        channel.samples.resize(static_cast<std::size_t>(total_seconds));
        for (std::int64_t t = 0; t < total_seconds; ++t) {
            const double p = on[static_cast<std::size_t>(t)] ? spec.on_power : 0.0;
            channel.samples[static_cast<std::size_t>(t)] = {t, p};
            trace.samples[static_cast<std::size_t>(t)].power += p;
        }
        trace.per_appliance.push_back(std::move(channel));
        noise_var += spec.noise_stddev * spec.noise_stddev;
    }

    trace.noise_stddev = std::sqrt(noise_var);
    if (trace.noise_stddev > 0.0) {
        std::normal_distribution<double> noise(0.0, trace.noise_stddev);
        for (auto& sample : trace.samples) {
            sample.power = std::max(0.0, sample.power + noise(rng));
        }
    }
    return trace;
}

void validate_trace(const std::vector<PowerSample>& samples, bool allow_gaps) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].power)) {
            throw IntegrityError("sample " + std::to_string(i) + ": non-finite power");
        }
        if (samples[i].power < 0.0) {
            throw IntegrityError("sample " + std::to_string(i) + ": negative power");
        }
        if (i == 0) {
            continue;
        }
        const std::int64_t step = samples[i].timestamp - samples[i - 1].timestamp;
        if (step == 1) {
            continue;
        }
        if (step <= 0) {
            throw IntegrityError("sample " + std::to_string(i) +
                                 ": timestamp does not increase");
        }
        if (!allow_gaps) {
            throw IntegrityError("sample " + std::to_string(i) + ": " +
                                 std::to_string(step) + " s step on a gap-free trace");
        }
    }
}

namespace {

void append_double(std::string& out, double value) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof(buf), "%.10g", value);
    out.append(buf, static_cast<std::size_t>(len));
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot open " + path + " for writing");
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw InputError("write failed: " + path);
    }
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(trim(line.substr(start)));
            return fields;
        }
        fields.emplace_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

}  // namespace

void write_aggregate_csv(const std::string& path, const std::vector<PowerSample>& samples) {
    std::string body = "timestamp,power_w\n";
    body.reserve(body.size() + samples.size() * 20);
    for (const PowerSample& s : samples) {
        body += std::to_string(s.timestamp);
        body += ',';
        append_double(body, s.power);
        body += '\n';
    }
    write_text_file(path, body);
}

std::vector<PowerSample> read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path + ": empty file");
    }
    auto header = split_csv(trim(line));
    if (header.size() < 2 || header[0] != "timestamp" || header[1] != "power_w") {
        throw ParseError(path + ":1: expected header 'timestamp,power_w'");
    }
    std::vector<PowerSample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        const auto fields = split_csv(body);
        if (fields.size() < 2) {
            throw ParseError(where + ": expected at least 2 columns");
        }
        samples.push_back({parse_int(fields[0], where), parse_double(fields[1], where)});
        if (samples.size() > 1 &&
            samples[samples.size() - 2].timestamp >= samples.back().timestamp) {
            throw ParseError(where + ": timestamp does not increase");
        }
    }
    return samples;
}

void write_ground_truth_csv(const std::string& path, const GroundTruthTrace& trace) {
    std::string body = "timestamp,power_w";
    for (const ApplianceChannel& ch : trace.per_appliance) {
        body += ',';
        body += ch.label;
    }
    body += '\n';
    body.reserve(body.size() + trace.samples.size() * (16 + 12 * trace.per_appliance.size()));
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        body += std::to_string(trace.samples[i].timestamp);
        body += ',';
        append_double(body, trace.samples[i].power);
        for (const ApplianceChannel& ch : trace.per_appliance) {
            body += ',';
            append_double(body, ch.samples[i].power);
        }
        body += '\n';
    }
    write_text_file(path, body);
}

GroundTruthTrace read_ground_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path + ": empty file");
    }
    const auto header = split_csv(trim(line));
    if (header.size() < 2 || header[0] != "timestamp" || header[1] != "power_w") {
        throw ParseError(path + ":1: expected header 'timestamp,power_w,...'");
    }
    GroundTruthTrace trace;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c].empty()) {
            throw ParseError(path + ":1: empty appliance label in header");
        }
        trace.per_appliance.push_back({header[c], {}});
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        const auto fields = split_csv(body);
        if (fields.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) +
                             " columns, got " + std::to_string(fields.size()));
        }
        const std::int64_t ts = parse_int(fields[0], where);
        if (!trace.samples.empty()) {
            const std::int64_t prev = trace.samples.back().timestamp;
            if (ts <= prev) {
                throw ParseError(where + ": timestamp does not increase");
            }
            if (ts - prev > 1) {
                trace.gaps.push_back({prev, ts});
            }
        }
        trace.samples.push_back({ts, parse_double(fields[1], where)});
        for (std::size_t c = 2; c < fields.size(); ++c) {
            trace.per_appliance[c - 2].samples.push_back({ts, parse_double(fields[c], where)});
        }
    }
    if (trace.samples.empty()) {
        throw ParseError(path + ": no samples");
    }
    return trace;
}

}  // namespace nilm
