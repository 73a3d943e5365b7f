#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nilm/edge_detect.hpp"

namespace nilm {

/// Fixed-bin magnitude counts: 600 bins of 5 W covering [0, 3000) W, with
/// bin i spanning [5i, 5(i+1)). Magnitudes at or above 3000 W only bump
/// overflow_count.
struct StateHistogram {
    static constexpr double kBinWidth = 5.0;
    static constexpr int kBinCount = 600;

    std::array<std::uint32_t, kBinCount> counts{};
    std::uint64_t overflow_count = 0;

    std::uint64_t total() const;
};

struct PowerState {
    double nominal_power = 0.0;  // count-weighted mean of member bin centers
    std::uint64_t support = 0;
    int bin_lo = 0;  // inclusive
    int bin_hi = 0;  // inclusive
};

struct ClusterConfig {
    int min_support = 2;
    int gap_bins = 2;  // empty-bin run length that splits clusters
};

/// floor(watts / 5) for watts in [0, 3000); -1 for anything at or above
/// 3000 W or below 0.
int bin_index(double watts);

StateHistogram build_histogram(const std::vector<EdgePair>& pairs);

/// Splits the histogram into clusters wherever at least gap_bins consecutive
/// empty bins occur, drops clusters whose total count is below min_support,
/// and reports each survivor's count-weighted mean power (bin centers at
/// 5i + 2.5). Output is sorted by nominal_power ascending.
std::vector<PowerState> segment(const StateHistogram& hist, const ClusterConfig& config);

}  // namespace nilm
