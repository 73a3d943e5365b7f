#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "nilm/trace_io.hpp"

namespace nilm {

enum class EdgeDirection { rising, falling };

struct EdgeEvent {
    std::int64_t time = 0;  // timestamp of the first sample at the new level
    EdgeDirection direction = EdgeDirection::rising;
    double magnitude = 0.0;
    double pre_level = 0.0;
    double post_level = 0.0;
};

struct EdgePair {
    std::int64_t on_time = 0;
    std::int64_t off_time = 0;
    double magnitude = 0.0;  // mean of rise and fall magnitudes
    std::int64_t duration = 0;
};

struct EdgeConfig {
    int ma_window = 5;
    double edge_threshold = 30.0;
    double pair_tolerance_watts = 20.0;
    double pair_tolerance_fraction = 0.10;
    std::int64_t window_length = 86400;
};

struct PairingResult {
    std::vector<EdgePair> pairs;
    std::vector<EdgeEvent> unmatched;
};

/// Locates abrupt level changes in the filtered stream by comparing a trailing
/// and a leading moving average of ma_window samples. Contiguous runs where
/// the difference stays at or above edge_threshold collapse to one event per
/// monotone transition; pre/post levels are the settled averages bracketing
/// the run. Only events whose level change is at least edge_threshold are
/// reported.
std::vector<EdgeEvent> detect_edges(const std::vector<PowerSample>& filtered,
                                    const EdgeConfig& config);

/// Stack pairing of rising and falling edges: a falling edge matches the most
/// recent open rising edge whose magnitude differs by at most
/// max(pair_tolerance_watts, pair_tolerance_fraction * larger magnitude), so
/// nested activations resolve inside-out. Unmatched edges are returned.
PairingResult pair_edges(const std::vector<EdgeEvent>& edges, const EdgeConfig& config);

/// Consecutive [begin, end) index ranges covering the trace, each spanning up
/// to window_length seconds, advancing by step seconds. A final partial
/// window is yielded only when it spans at least one hour.
std::vector<std::pair<std::size_t, std::size_t>> sliding_windows(
    const std::vector<PowerSample>& trace, std::int64_t window_length, std::int64_t step);

}  // namespace nilm
