#pragma once

#include <cstdint>
#include <vector>

#include "nilm/appliance_db.hpp"

namespace nilm {

/// Exact forward filter over the full joint state space of a composed
/// appliance set, for validating the particle filter. Uses the same
/// transition and Gaussian observation model, but enumerates all 2^N joint
/// states, so construction is refused above max_chains (the state space
/// doubles per appliance). Plain standard-library arithmetic throughout;
/// nothing is shared with the particle filter's inner loops.
class ExactFilter {
  public:
    static constexpr std::size_t kDefaultMaxChains = 12;

    ExactFilter(Fhmm fhmm, double observation_noise_stddev,
                std::size_t max_chains = kDefaultMaxChains);

    void step(double observation);

    const std::vector<double>& posterior() const { return posterior_; }

    /// Highest-probability packed joint state (ties: lowest state value).
    std::uint64_t argmax_state() const;

    /// Posterior probability that chain `index` is ON.
    double marginal_on(std::size_t index) const;

  private:
    Fhmm fhmm_;
    double sigma_;
    std::vector<double> posterior_;
    std::vector<double> joint_power_;
    std::vector<double> scratch_;
};

}  // namespace nilm
