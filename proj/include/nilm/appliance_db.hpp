#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nilm/state_cluster.hpp"

namespace nilm {

struct ApplianceMetadata {
    int first_seen_day = 0;
    int last_seen_day = 0;
    std::map<int, std::uint32_t> appearances_per_day;
    std::map<int, double> energy_kwh_per_day;
    std::map<int, std::int64_t> operational_seconds_per_day;

    std::uint64_t total_appearances() const;
};

/// Two-state appliance chain: observations are {0 W, on_power}, the initial
/// state is OFF with probability 1, and transition is row-stochastic with
/// row 0 = OFF, row 1 = ON.
struct ApplianceModel {
    std::uint64_t id = 0;
    double on_power = 0.0;
    std::array<std::array<double, 2>, 2> transition{};
    ApplianceMetadata metadata;
};

struct DbConfig {
    double merge_threshold = 50.0;  // merge strictly below, keep separate at or above
    int prune_min_total_appearances = 3;
    int prune_stale_days = 7;
    double ema_weight = 0.3;
    double default_stay_prob = 0.99;
};

struct UpdateReport {
    int day = 0;
    std::vector<std::uint64_t> created;
    std::vector<std::uint64_t> merged;  // ids that absorbed a state or another model
    std::vector<std::uint64_t> pruned;
};

ApplianceModel make_hmm(const PowerState& state, double default_stay_prob);

/// Composed appliance set in a fixed order (on_power ascending, ties by id);
/// a joint state's observation is the sum of on_powers of its ON members.
struct Fhmm {
    struct Chain {
        std::uint64_t id = 0;
        double on_power = 0.0;
        std::array<std::array<double, 2>, 2> transition{};
    };
    std::vector<Chain> chains;
};

/// Evolving model set. All mutation goes through update() and record_usage(),
/// which keep every pair of models at least merge_threshold apart.
class ApplianceDatabase {
  public:
    ApplianceDatabase() = default;
    explicit ApplianceDatabase(DbConfig config);

    /// Folds a batch of detected states into the models for `day`: a state
    /// lands on the nearest model strictly within merge_threshold (nominal
    /// power blends by ema_weight), otherwise becomes a new model. Pairs of
    /// models pushed within merge_threshold of each other collapse nearest
    /// pair first. Models unseen for more than prune_stale_days with fewer
    /// than prune_min_total_appearances lifetime appearances are dropped.
    /// The batch is processed in a canonical order, so the result does not
    /// depend on the order of `states`. Throws OrderingError when `day`
    /// precedes the newest update.
    UpdateReport update(const std::vector<PowerState>& states, int day);

    /// Accumulates per-day usage for one model; unknown ids are ignored
    /// (the model may have been merged away or pruned).
    void record_usage(std::uint64_t id, int day, double energy_kwh,
                      std::int64_t operational_seconds);

    const std::vector<ApplianceModel>& models() const { return models_; }
    const DbConfig& config() const { return config_; }
    int current_day() const { return current_day_; }

    friend bool operator==(const ApplianceDatabase&, const ApplianceDatabase&);

  private:
    friend ApplianceDatabase load_database(const std::string& path);
    friend void save_database(const ApplianceDatabase& db, const std::string& path);

    void collapse_collisions(UpdateReport& report);
    void check_invariants() const;

    std::vector<ApplianceModel> models_;
    DbConfig config_;
    int current_day_ = -1;
    std::uint64_t next_id_ = 1;
};

Fhmm compose_fhmm(const ApplianceDatabase& db);

/// Plain-text persistence, format documented in docs/db_format.md.
/// load_database re-checks every database invariant and throws
/// IntegrityError naming the violated one.
void save_database(const ApplianceDatabase& db, const std::string& path);
ApplianceDatabase load_database(const std::string& path);

}  // namespace nilm
