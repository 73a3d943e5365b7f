#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nilm/disaggregator.hpp"
#include "nilm/trace_io.hpp"

namespace nilm {

/// Nearest-reference assignment of detected power levels: index into the
/// reference list, or -1 (unknown) when no reference lies within
/// distance_threshold. Equal distances resolve to the lower-wattage
/// reference.
struct StateMapping {
    std::vector<int> assignment;  // parallel to the detected input
    double distance_threshold = 75.0;
    std::size_t assignable = 0;
    std::size_t unassignable = 0;
};

StateMapping map_states(const std::vector<double>& detected,
                        const std::vector<double>& reference, double threshold);

/// sqrt(mean((estimated - actual)^2)); throws AlignmentError on length
/// mismatch or empty input.
double rmse(const std::vector<double>& estimated, const std::vector<double>& actual);

/// Columnar per-sample estimate stream: one power series per appliance id,
/// plus the decided total. `on_power` tracks the latest nonzero estimated
/// power of the channel, which is the appliance's learned ON level.
struct EstimateSeries {
    struct Channel {
        std::uint64_t id = 0;
        double on_power = 0.0;
        std::vector<double> power;
    };

    std::vector<std::int64_t> timestamps;
    std::vector<Channel> channels;
    std::vector<double> total;

    /// Appends one estimate; channels appearing mid-stream are back-filled
    /// with zeros, channels absent from this estimate get a zero sample.
    void append(const DisaggregationEstimate& estimate);
};

struct EvaluationReport {
    std::vector<std::pair<std::string, double>> per_appliance_rmse;  // ground-truth label
    double total_energy_estimated_kwh = 0.0;
    double total_energy_actual_kwh = 0.0;
    double energy_error_fraction = 0.0;
    /// Estimated-energy fractions per reference level ("<watts>W") plus
    /// "unknown"; sums to 1 when any energy was estimated.
    std::vector<std::pair<std::string, double>> energy_shares;
    /// Ground-truth energy fractions per appliance label.
    std::vector<std::pair<std::string, double>> actual_energy_shares;
    std::map<int, std::uint32_t> states_assignable_per_day;
    std::map<int, std::uint32_t> states_unassignable_per_day;
};

/// Scores an estimate stream against ground truth on the same 1 Hz grid
/// (timestamps must match sample-for-sample; throws AlignmentError
/// otherwise). Estimated channels attach to reference levels by the
/// nearest-within-threshold rule; channels with no reference within
/// threshold accumulate under "unknown". Per-appliance RMSE compares each
/// ground-truth appliance against the sum of estimate channels nearest to it
/// within threshold. `detected_states_per_day` (optional, may be empty) fills
/// the per-day assignability counters.
EvaluationReport energy_report(
    const EstimateSeries& estimates, const GroundTruthTrace& ground_truth,
    const std::vector<double>& reference_states, double mapping_threshold,
    const std::map<int, std::vector<double>>& detected_states_per_day = {});

/// Groups ground-truth appliances whose typical ON levels sit closer than
/// merge_threshold (single linkage over the sorted levels) and sums each
/// group into one channel labelled with the joined member labels.
std::vector<ApplianceChannel> virtual_appliance_grouping(
    const std::vector<ApplianceChannel>& per_appliance, double merge_threshold);

}  // namespace nilm
