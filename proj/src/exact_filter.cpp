#include "nilm/exact_filter.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nilm/errors.hpp"

namespace nilm {

ExactFilter::ExactFilter(Fhmm fhmm, double observation_noise_stddev, std::size_t max_chains)
    : fhmm_(std::move(fhmm)), sigma_(observation_noise_stddev) {
    if (fhmm_.chains.size() > max_chains) {
        throw CapabilityError("exact filter limited to " + std::to_string(max_chains) +
                              " chains, got " + std::to_string(fhmm_.chains.size()));
    }
    if (!(sigma_ > 0.0)) {
        throw ConfigError("observation_noise_stddev must be > 0");
    }
    const std::size_t state_count = std::size_t{1} << fhmm_.chains.size();
    posterior_.assign(state_count, 0.0);
    posterior_[0] = 1.0;  // every chain starts OFF
    scratch_.resize(state_count);
    joint_power_.assign(state_count, 0.0);
    for (std::size_t s = 0; s < state_count; ++s) {
        for (std::size_t c = 0; c < fhmm_.chains.size(); ++c) {
            if (s & (std::size_t{1} << c)) {
                joint_power_[s] += fhmm_.chains[c].on_power;
            }
        }
    }
}

void ExactFilter::step(double observation) {
    if (!std::isfinite(observation)) {
        throw InputError("non-finite observation");
    }
    const std::size_t state_count = posterior_.size();

    // Prediction factorizes over chains: one in-place sweep per chain updates
    // the pair of states that differ only in that chain's bit.
    for (std::size_t c = 0; c < fhmm_.chains.size(); ++c) {
        const std::uint64_t bit = std::uint64_t{1} << c;
        const auto& t = fhmm_.chains[c].transition;
        for (std::size_t s = 0; s < state_count; ++s) {
            if (s & bit) {
                continue;
            }
            const double p_off = posterior_[s];
            const double p_on = posterior_[s | bit];
            scratch_[s] = p_off * t[0][0] + p_on * t[1][0];
            scratch_[s | bit] = p_off * t[0][1] + p_on * t[1][1];
        }
        posterior_.swap(scratch_);
    }

    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < state_count; ++s) {
        const double d = joint_power_[s] - observation;
        scratch_[s] = -0.5 * d * d / (sigma_ * sigma_);
        if (posterior_[s] > 0.0 && scratch_[s] > max_log) {
            max_log = scratch_[s];
        }
    }
    double total = 0.0;
    for (std::size_t s = 0; s < state_count; ++s) {
        posterior_[s] *= std::exp(scratch_[s] - max_log);
        total += posterior_[s];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        const double uniform = 1.0 / static_cast<double>(state_count);
        for (double& p : posterior_) {
            p = uniform;
        }
        return;
    }
    for (double& p : posterior_) {
        p /= total;
    }
}

std::uint64_t ExactFilter::argmax_state() const {
    std::uint64_t best = 0;
    for (std::size_t s = 1; s < posterior_.size(); ++s) {
        if (posterior_[s] > posterior_[best]) {
            best = s;
        }
    }
    return best;
}

double ExactFilter::marginal_on(std::size_t index) const {
    const std::uint64_t bit = std::uint64_t{1} << index;
    double total = 0.0;
    for (std::size_t s = 0; s < posterior_.size(); ++s) {
        if (s & bit) {
            total += posterior_[s];
        }
    }
    return total;
}

}  // namespace nilm
