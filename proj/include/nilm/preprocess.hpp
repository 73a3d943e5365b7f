#pragma once

#include <vector>

namespace nilm {

enum class Smoothing { none, moving_average };

struct FilterConfig {
    int median_window = 31;
    Smoothing smoothing = Smoothing::none;
    int smoothing_window = 5;
};

/// Sliding median with the window shrunk symmetrically at the ends, so every
/// effective window stays odd and the median is unique. Output length equals
/// input length. Throws ConfigError when the window is even, < 3, or larger
/// than the input.
std::vector<double> median_filter(const std::vector<double>& samples, int window);

/// Median filter followed by an optional centered moving average.
std::vector<double> smooth(const std::vector<double>& samples, const FilterConfig& config);

}  // namespace nilm
