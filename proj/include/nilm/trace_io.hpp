#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nilm {

struct PowerSample {
    std::int64_t timestamp = 0;
    double power = 0.0;

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Interval with no usable readings: `last_before` and `first_after` are the
/// valid sample timestamps bounding the hole. Downstream stages treat any
/// timestamp jump > 1 s as a window boundary, so gap traces stay processable.
struct GapRecord {
    std::int64_t last_before = 0;
    std::int64_t first_after = 0;
};

struct ApplianceChannel {
    std::string label;
    std::vector<PowerSample> samples;
};

struct GroundTruthTrace {
    std::vector<PowerSample> samples;
    std::vector<ApplianceChannel> per_appliance;
    std::vector<GapRecord> gaps;
    double noise_stddev = 0.0;
    std::size_t clamped_negative_readings = 0;
};

struct ApplianceSpec {
    std::string label;
    double on_power = 0.0;
    double mean_on_duration = 0.0;
    double activations_per_day = 0.0;
    double noise_stddev = 0.0;
};

/// Reads one two-column `<unix-timestamp> <watts>` file per channel, resamples
/// each selected channel to an exact 1 Hz grid (forward-fill holes of at most
/// 20 s, longer holes become GapRecords), and sums the selected channels into
/// the aggregate. Per-appliance series share the aggregate's grid. Negative
/// readings clamp to 0 and are counted.
GroundTruthTrace load_channel_files(const std::vector<std::string>& paths,
                                    const std::vector<std::size_t>& channel_selection);

/// Deterministic synthetic household: per appliance and day, a Poisson number
/// of activations with uniform start times and exponential durations. The
/// per-appliance series are noise-free two-state signals; the aggregate is
/// their sum plus zero-mean Gaussian noise with stddev sqrt(sum of squared
/// per-spec stddevs), clamped at 0.
GroundTruthTrace generate_synthetic(const std::vector<ApplianceSpec>& specs,
                                    int days, std::uint64_t seed);

/// Checks sample invariants: finite non-negative power, strictly increasing
/// timestamps, and (unless allow_gaps) steps of exactly 1 s. Throws
/// IntegrityError naming the first violation.
void validate_trace(const std::vector<PowerSample>& samples, bool allow_gaps = false);

/// CSV with header `timestamp,power_w`; powers printed with %.10g.
void write_aggregate_csv(const std::string& path, const std::vector<PowerSample>& samples);
std::vector<PowerSample> read_aggregate_csv(const std::string& path);

/// CSV with header `timestamp,power_w,<label>...`: aggregate plus one column
/// per appliance, all on the aggregate grid.
void write_ground_truth_csv(const std::string& path, const GroundTruthTrace& trace);
GroundTruthTrace read_ground_truth_csv(const std::string& path);

}  // namespace nilm
