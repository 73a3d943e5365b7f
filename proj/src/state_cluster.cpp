#include "nilm/state_cluster.hpp"

#include <string>

#include "nilm/errors.hpp"

namespace nilm {

std::uint64_t StateHistogram::total() const {
    std::uint64_t sum = overflow_count;
    for (std::uint32_t c : counts) {
        sum += c;
    }
    return sum;
}

int bin_index(double watts) {
    if (watts < 0.0 || watts >= StateHistogram::kBinWidth * StateHistogram::kBinCount) {
        return -1;
    }
    return static_cast<int>(watts / StateHistogram::kBinWidth);
}

StateHistogram build_histogram(const std::vector<EdgePair>& pairs) {
    StateHistogram hist;
    for (const EdgePair& pair : pairs) {
        const int bin = bin_index(pair.magnitude);
        if (bin < 0) {
            ++hist.overflow_count;
        } else {
            ++hist.counts[static_cast<std::size_t>(bin)];
        }
    }
    return hist;
}

std::vector<PowerState> segment(const StateHistogram& hist, const ClusterConfig& config) {
    if (config.min_support < 1) {
        throw ConfigError("min_support must be >= 1, got " +
                          std::to_string(config.min_support));
    }
    if (config.gap_bins < 1) {
        throw ConfigError("gap_bins must be >= 1, got " + std::to_string(config.gap_bins));
    }

    std::vector<PowerState> states;
    PowerState current;
    double weighted_sum = 0.0;
    bool open = false;
    int empty_run = 0;

    const auto close = [&]() {
        if (open && current.support >= static_cast<std::uint64_t>(config.min_support)) {
            current.nominal_power = weighted_sum / static_cast<double>(current.support);
            states.push_back(current);
        }
        open = false;
        weighted_sum = 0.0;
        current = PowerState{};
    };

    for (int bin = 0; bin < StateHistogram::kBinCount; ++bin) {
        const std::uint32_t count = hist.counts[static_cast<std::size_t>(bin)];
        if (count == 0) {
            if (open && ++empty_run >= config.gap_bins) {
                close();
            }
            continue;
        }
        empty_run = 0;
        if (!open) {
            open = true;
            current.bin_lo = bin;
            current.support = 0;
        }
        current.bin_hi = bin;
        current.support += count;
        const double center = (static_cast<double>(bin) + 0.5) * StateHistogram::kBinWidth;
        weighted_sum += center * count;
    }
    close();
    return states;
}

}  // namespace nilm
