#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nilm/appliance_db.hpp"

namespace nilm {

struct PfConfig {
    std::size_t particle_count = 1000;
    double observation_noise_stddev = 25.0;
    double resample_threshold = 0.5;  // resample when ESS < threshold * particle_count
    double decision_threshold = 0.5;
    std::uint64_t rng_seed = 0;
};

struct ApplianceEstimate {
    std::uint64_t id = 0;
    double on_probability = 0.0;
    bool on = false;
    double estimated_power = 0.0;
};

struct DisaggregationEstimate {
    std::int64_t timestamp = 0;
    std::vector<ApplianceEstimate> per_appliance;  // composed chain order
    double total_estimated_power = 0.0;
};

/// ON iff on_probability >= threshold.
std::vector<bool> decide(const std::vector<double>& on_probabilities, double threshold);

/// Sequential Monte Carlo filter over the composed appliance set. Particles
/// are joint states packed one bit per chain (bit i = chain i ON). Every
/// particle starts all-OFF with uniform weight. Each step propagates through
/// the per-chain transitions, reweights by a Gaussian likelihood of the
/// observed aggregate power, renormalizes, and systematically resamples when
/// the effective sample size degenerates. Fixed seed implies an identical
/// estimate stream.
class ParticleFilter {
  public:
    ParticleFilter(Fhmm fhmm, const PfConfig& config);

    /// Throws InputError on a non-finite observation.
    DisaggregationEstimate step(std::int64_t timestamp, double observation);

    /// Swaps in an updated appliance set: particles keep the marginal state
    /// of chains whose id persists; chains new to the set start OFF.
    void rebind(Fhmm fhmm);

    const Fhmm& fhmm() const { return fhmm_; }

    /// Highest-total-weight packed joint state (ties: lowest state value).
    std::uint64_t argmax_state() const;

    const std::vector<double>& weights() const { return weights_; }

  private:
    void rebuild_power_table();
    void predict_powers();

    Fhmm fhmm_;
    PfConfig config_;
    std::mt19937_64 rng_;
    std::vector<std::uint64_t> states_;
    std::vector<std::uint64_t> scratch_states_;
    std::vector<double> weights_;
    std::vector<double> uniforms_;
    std::vector<double> predicted_;
    std::vector<double> log_likelihood_;
    std::vector<double> likelihood_;
    std::vector<double> power_table_;  // filled for small chain counts only
};

}  // namespace nilm
