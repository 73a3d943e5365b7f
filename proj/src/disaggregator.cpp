#include "nilm/disaggregator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "nilm/errors.hpp"
#include "nilm/kernels.hpp"

namespace nilm {
namespace {

// Power tables above this chain count would outgrow the L2 cache; predictions
// then fall back to per-chain masked adds.
constexpr std::size_t kMaxTableChains = 16;

// mt19937_64 output mapped to [0, 1) without going through std::
// distributions, so streams are identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<bool> decide(const std::vector<double>& on_probabilities, double threshold) {
    std::vector<bool> on(on_probabilities.size());
    for (std::size_t i = 0; i < on_probabilities.size(); ++i) {
        on[i] = on_probabilities[i] >= threshold;
    }
    return on;
}

ParticleFilter::ParticleFilter(Fhmm fhmm, const PfConfig& config)
    : fhmm_(std::move(fhmm)), config_(config), rng_(config.rng_seed) {
    if (config_.particle_count < 1) {
        throw ConfigError("particle_count must be >= 1");
    }
    if (!(config_.observation_noise_stddev > 0.0)) {
        throw ConfigError("observation_noise_stddev must be > 0");
    }
    if (!(config_.decision_threshold > 0.0) || !(config_.decision_threshold < 1.0)) {
        throw ConfigError("decision_threshold must be in (0, 1)");
    }
    if (fhmm_.chains.size() > 64) {
        throw CapabilityError("at most 64 appliance chains per filter, got " +
                              std::to_string(fhmm_.chains.size()));
    }
    const std::size_t n = config_.particle_count;
    states_.assign(n, 0);
    scratch_states_.resize(n);
    weights_.assign(n, 1.0 / static_cast<double>(n));
    uniforms_.resize(n);
    predicted_.resize(n);
    log_likelihood_.resize(n);
    likelihood_.resize(n);
    rebuild_power_table();
}

void ParticleFilter::rebuild_power_table() {
    power_table_.clear();
    const std::size_t chains = fhmm_.chains.size();
    if (chains == 0 || chains > kMaxTableChains) {
        return;
    }
    power_table_.assign(std::size_t{1} << chains, 0.0);
    for (std::size_t s = 0; s < power_table_.size(); ++s) {
        double total = 0.0;
        for (std::size_t c = 0; c < chains; ++c) {
            if (s & (std::size_t{1} << c)) {
                total += fhmm_.chains[c].on_power;
            }
        }
        power_table_[s] = total;
    }
}

void ParticleFilter::predict_powers() {
    const auto& ops = kernels::active_ops();
    const std::size_t n = states_.size();
    if (!power_table_.empty()) {
        const std::uint64_t mask = power_table_.size() - 1;
        ops.lookup_power(states_.data(), n, power_table_.data(), mask, predicted_.data());
        return;
    }
    std::fill(predicted_.begin(), predicted_.end(), 0.0);
    for (std::size_t c = 0; c < fhmm_.chains.size(); ++c) {
        ops.masked_add(states_.data(), n, std::uint64_t{1} << c, fhmm_.chains[c].on_power,
                       predicted_.data());
    }
}

DisaggregationEstimate ParticleFilter::step(std::int64_t timestamp, double observation) {
    if (!std::isfinite(observation)) {
        throw InputError("non-finite observation at t=" + std::to_string(timestamp));
    }
    const auto& ops = kernels::active_ops();
    const std::size_t n = states_.size();

    for (std::size_t c = 0; c < fhmm_.chains.size(); ++c) {
        const auto& chain = fhmm_.chains[c];
        for (std::size_t i = 0; i < n; ++i) {
            uniforms_[i] = uniform01(rng_);
        }
        ops.flip_states(states_.data(), uniforms_.data(), n, static_cast<unsigned>(c),
                        chain.transition[0][1], chain.transition[1][0]);
    }

    predict_powers();

    const double sigma = config_.observation_noise_stddev;
    ops.squared_error_scale(predicted_.data(), n, observation, -0.5 / (sigma * sigma),
                            log_likelihood_.data());
    const double shift = ops.max(log_likelihood_.data(), n);
    ops.exp_shift(log_likelihood_.data(), n, shift, likelihood_.data());
    ops.mul_inplace(weights_.data(), likelihood_.data(), n);

    double total = ops.sum(weights_.data(), n);
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Every surviving hypothesis became numerically impossible; restart
        // from an uninformative weighting rather than emit NaNs.
        std::fill(weights_.begin(), weights_.end(), 1.0 / static_cast<double>(n));
        total = 1.0;
    } else {
        ops.scale(weights_.data(), n, 1.0 / total);
    }

    const double ess = 1.0 / ops.dot(weights_.data(), weights_.data(), n);
    if (ess < config_.resample_threshold * static_cast<double>(n)) {
        const double u0 = uniform01(rng_);
        double cumulative = weights_[0];
        std::size_t source = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double target =
                (static_cast<double>(i) + u0) / static_cast<double>(n);
            while (cumulative < target && source + 1 < n) {
                ++source;
                cumulative += weights_[source];
            }
            scratch_states_[i] = states_[source];
        }
        states_.swap(scratch_states_);
        std::fill(weights_.begin(), weights_.end(), 1.0 / static_cast<double>(n));
    }

    DisaggregationEstimate estimate;
    estimate.timestamp = timestamp;
    estimate.per_appliance.resize(fhmm_.chains.size());
    for (std::size_t c = 0; c < fhmm_.chains.size(); ++c) {
        const double p_on =
            ops.masked_weight_sum(states_.data(), weights_.data(), n, std::uint64_t{1} << c);
        ApplianceEstimate& out = estimate.per_appliance[c];
        out.id = fhmm_.chains[c].id;
        out.on_probability = std::clamp(p_on, 0.0, 1.0);
        out.on = out.on_probability >= config_.decision_threshold;
        out.estimated_power = out.on ? fhmm_.chains[c].on_power : 0.0;
        estimate.total_estimated_power += out.estimated_power;
    }
    return estimate;
}

void ParticleFilter::rebind(Fhmm fhmm) {
    if (fhmm.chains.size() > 64) {
        throw CapabilityError("at most 64 appliance chains per filter, got " +
                              std::to_string(fhmm.chains.size()));
    }
    std::vector<int> source_bit(fhmm.chains.size(), -1);
    for (std::size_t c = 0; c < fhmm.chains.size(); ++c) {
        for (std::size_t old = 0; old < fhmm_.chains.size(); ++old) {
            if (fhmm_.chains[old].id == fhmm.chains[c].id) {
                source_bit[c] = static_cast<int>(old);
                break;
            }
        }
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
        std::uint64_t mapped = 0;
        for (std::size_t c = 0; c < fhmm.chains.size(); ++c) {
            if (source_bit[c] >= 0 &&
                (states_[i] >> static_cast<unsigned>(source_bit[c])) & 1u) {
                mapped |= std::uint64_t{1} << c;
            }
        }
        states_[i] = mapped;
    }
    fhmm_ = std::move(fhmm);
    rebuild_power_table();
}

std::uint64_t ParticleFilter::argmax_state() const {
    std::unordered_map<std::uint64_t, double> mass;
    mass.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
        mass[states_[i]] += weights_[i];
    }
    std::uint64_t best_state = 0;
    double best_mass = -1.0;
    for (const auto& [state, total] : mass) {
        if (total > best_mass || (total == best_mass && state < best_state)) {
            best_mass = total;
            best_state = state;
        }
    }
    return best_state;
}

}  // namespace nilm
