#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "nilm/appliance_db.hpp"
#include "nilm/disaggregator.hpp"
#include "nilm/edge_detect.hpp"
#include "nilm/preprocess.hpp"
#include "nilm/state_cluster.hpp"
#include "nilm/trace_io.hpp"

namespace nilm {

struct PipelineConfig {
    FilterConfig filter;
    EdgeConfig edges;
    ClusterConfig cluster;
    DbConfig db;
    PfConfig pf;
};

/// Streaming orchestration: every pushed sample is classified immediately by
/// the particle filter against the models learned so far, while samples also
/// fill the current learning window. When a window completes (window_length
/// seconds elapse, or a timestamp jump > 1 s forces a boundary), the window
/// is filtered, its edges detected and paired, magnitudes clustered, the
/// model set updated, and the filter rebound, so new knowledge applies from
/// the next sample on and never retroactively. Unmatched edges carry into the
/// following window once. Day indices are timestamp / 86400.
class OnlinePipeline {
  public:
    OnlinePipeline(const PipelineConfig& config, ApplianceDatabase db);

    /// Throws OrderingError when the timestamp does not advance.
    DisaggregationEstimate push(const PowerSample& sample);

    /// Closes the trailing partial window if it spans at least one hour.
    void finish();

    const ApplianceDatabase& database() const { return db_; }
    const std::vector<UpdateReport>& reports() const { return reports_; }

    /// Detected states per day, kept for evaluation of assignability.
    const std::map<int, std::vector<double>>& detected_states_per_day() const {
        return detected_states_per_day_;
    }

  private:
    void close_window();

    PipelineConfig config_;
    ApplianceDatabase db_;
    ParticleFilter filter_;
    std::vector<PowerSample> window_;
    std::int64_t window_start_ = 0;
    std::int64_t last_timestamp_ = 0;
    bool any_sample_ = false;
    std::vector<EdgeEvent> carried_edges_;
    std::vector<UpdateReport> reports_;
    std::map<int, std::vector<double>> detected_states_per_day_;
    std::map<std::uint64_t, double> window_energy_ws_;
    std::map<std::uint64_t, std::int64_t> window_on_seconds_;
};

struct RunResult {
    ApplianceDatabase database;
    std::vector<UpdateReport> reports;
    std::map<int, std::vector<double>> detected_states_per_day;
};

/// Batch replay of a full trace through OnlinePipeline; every estimate goes
/// to `sink` in timestamp order.
RunResult run_online(const std::vector<PowerSample>& trace, const PipelineConfig& config,
                     ApplianceDatabase initial_db,
                     const std::function<void(const DisaggregationEstimate&)>& sink);

/// Convenience overload retaining all estimates in memory.
RunResult run_online(const std::vector<PowerSample>& trace, const PipelineConfig& config,
                     ApplianceDatabase initial_db,
                     std::vector<DisaggregationEstimate>& estimates);

}  // namespace nilm
