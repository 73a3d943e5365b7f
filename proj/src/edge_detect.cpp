#include "nilm/edge_detect.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nilm/errors.hpp"

namespace nilm {
namespace {

constexpr std::int64_t kMinPartialWindow = 3600;

struct CandidateRun {
    std::size_t begin = 0;  // first index with |lead - trail| >= threshold
    std::size_t end = 0;    // last such index (inclusive)
    bool rising = false;
};

}  // namespace

std::vector<EdgeEvent> detect_edges(const std::vector<PowerSample>& filtered,
                                    const EdgeConfig& config) {
    if (config.ma_window < 1) {
        throw ConfigError("ma_window must be >= 1, got " + std::to_string(config.ma_window));
    }
    if (!(config.edge_threshold > 0.0)) {
        throw ConfigError("edge_threshold must be > 0");
    }
    const std::size_t n = filtered.size();
    std::vector<EdgeEvent> edges;
    if (n < 2) {
        return edges;
    }
    const std::size_t w = static_cast<std::size_t>(config.ma_window);

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + filtered[i].power;
    }
    // Trailing mean over samples (i-w, i] and leading mean over (i, i+w],
    // both clipped at the trace ends.
    const auto trail = [&](std::size_t i) {
        const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
        return (prefix[i + 1] - prefix[lo]) / static_cast<double>(i + 1 - lo);
    };
    const auto lead = [&](std::size_t i) {
        const std::size_t hi = std::min(n, i + 1 + w);
        return (prefix[hi] - prefix[i + 1]) / static_cast<double>(hi - i - 1);
    };

    std::vector<CandidateRun> runs;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double diff = lead(i) - trail(i);
        if (std::abs(diff) < config.edge_threshold) {
            continue;
        }
        const bool rising = diff > 0.0;
        if (!runs.empty() && runs.back().end + 1 == i && runs.back().rising == rising) {
            runs.back().end = i;
        } else {
            runs.push_back({i, i, rising});
        }
    }

    for (const CandidateRun& run : runs) {
        std::size_t steepest = run.begin;
        double sharpest = -1.0;
        for (std::size_t i = run.begin; i <= run.end; ++i) {
            const double jump = std::abs(filtered[i + 1].power - filtered[i].power);
            if (jump > sharpest) {
                sharpest = jump;
                steepest = i;
            }
        }
        EdgeEvent event;
        event.pre_level = trail(run.begin);
        event.post_level = lead(run.end);
        event.magnitude = std::abs(event.post_level - event.pre_level);
        event.direction = event.post_level > event.pre_level ? EdgeDirection::rising
                                                             : EdgeDirection::falling;
        event.time = filtered[steepest + 1].timestamp;
        const bool consistent = (event.direction == EdgeDirection::rising) == run.rising;
        if (event.magnitude >= config.edge_threshold && consistent) {
            edges.push_back(event);
        }
    }
    return edges;
}

PairingResult pair_edges(const std::vector<EdgeEvent>& edges, const EdgeConfig& config) {
    PairingResult result;
    std::vector<EdgeEvent> open_rises;
    std::vector<char> consumed(edges.size(), 0);

    const auto compatible = [&](double rise, double fall) {
        const double tolerance = std::max(config.pair_tolerance_watts,
                                          config.pair_tolerance_fraction * std::max(rise, fall));
        return std::abs(rise - fall) <= tolerance;
    };

    for (const EdgeEvent& edge : edges) {
        if (edge.direction == EdgeDirection::rising) {
            open_rises.push_back(edge);
            continue;
        }
        bool matched = false;
        for (std::size_t k = open_rises.size(); k-- > 0;) {
            if (!compatible(open_rises[k].magnitude, edge.magnitude)) {
                continue;
            }
            EdgePair pair;
            pair.on_time = open_rises[k].time;
            pair.off_time = edge.time;
            pair.magnitude = (open_rises[k].magnitude + edge.magnitude) / 2.0;
            pair.duration = pair.off_time - pair.on_time;
            if (pair.duration > 0) {
                result.pairs.push_back(pair);
                open_rises.erase(open_rises.begin() + static_cast<std::ptrdiff_t>(k));
                matched = true;
                break;
            }
        }
        if (!matched) {
            result.unmatched.push_back(edge);
        }
    }
    for (const EdgeEvent& rise : open_rises) {
        result.unmatched.push_back(rise);
    }
    std::sort(result.unmatched.begin(), result.unmatched.end(),
              [](const EdgeEvent& a, const EdgeEvent& b) { return a.time < b.time; });
    return result;
}

std::vector<std::pair<std::size_t, std::size_t>> sliding_windows(
    const std::vector<PowerSample>& trace, std::int64_t window_length, std::int64_t step) {
    if (window_length < kMinPartialWindow) {
        throw ConfigError("window_length must be >= 3600 s");
    }
    if (step < 1 || step > window_length) {
        throw ConfigError("step must be in [1, window_length]");
    }
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    if (trace.empty()) {
        return windows;
    }
    const std::int64_t t0 = trace.front().timestamp;
    const std::int64_t t_end = trace.back().timestamp + 1;
    std::size_t begin_hint = 0;
    for (std::int64_t start = t0; start < t_end; start += step) {
        const std::int64_t stop = start + window_length;
        while (begin_hint < trace.size() && trace[begin_hint].timestamp < start) {
            ++begin_hint;
        }
        std::size_t end = begin_hint;
        while (end < trace.size() && trace[end].timestamp < stop) {
            ++end;
        }
        if (begin_hint == end) {
            continue;
        }
        const bool final_window = stop >= t_end;
        if (final_window && t_end - start < kMinPartialWindow) {
            break;
        }
        windows.push_back({begin_hint, end});
        if (end == trace.size()) {
            break;
        }
    }
    return windows;
}

}  // namespace nilm
