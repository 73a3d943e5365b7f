#include "nilm/preprocess.hpp"

#include <algorithm>
#include <cstddef>
#include <string>

#include "nilm/errors.hpp"

namespace nilm {

std::vector<double> median_filter(const std::vector<double>& samples, int window) {
    if (window < 3 || window % 2 == 0) {
        throw ConfigError("median window must be odd and >= 3, got " +
                          std::to_string(window));
    }
    const std::size_t n = samples.size();
    if (static_cast<std::size_t>(window) > n) {
        throw ConfigError("median window " + std::to_string(window) +
                          " exceeds input length " + std::to_string(n));
    }
    const std::size_t max_half = static_cast<std::size_t>(window - 1) / 2;
    std::vector<double> out(n);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(window));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t half = std::min({max_half, i, n - 1 - i});
        buf.assign(samples.begin() + static_cast<std::ptrdiff_t>(i - half),
                   samples.begin() + static_cast<std::ptrdiff_t>(i + half + 1));
        std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(half),
                         buf.end());
        out[i] = buf[half];
    }
    return out;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& samples, int window) {
    if (window < 1) {
        throw ConfigError("smoothing window must be >= 1, got " + std::to_string(window));
    }
    const std::size_t n = samples.size();
    const std::size_t left = static_cast<std::size_t>(window) / 2;
    const std::size_t right = static_cast<std::size_t>(window - 1) / 2;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + samples[i];
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n - 1, i + right);
        out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace

std::vector<double> smooth(const std::vector<double>& samples, const FilterConfig& config) {
    std::vector<double> out = median_filter(samples, config.median_window);
    if (config.smoothing == Smoothing::moving_average) {
        out = moving_average(out, config.smoothing_window);
    }
    return out;
}

}  // namespace nilm
