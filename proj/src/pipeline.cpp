#include "nilm/pipeline.hpp"

#include <string>
#include <utility>

#include "nilm/errors.hpp"

namespace nilm {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kMinLearnSpan = 3600;

int day_of(std::int64_t timestamp) {
    return static_cast<int>(timestamp / kSecondsPerDay);
}

}  // namespace

OnlinePipeline::OnlinePipeline(const PipelineConfig& config, ApplianceDatabase db)
    : config_(config), db_(std::move(db)), filter_(compose_fhmm(db_), config.pf) {
    if (config_.edges.window_length < kMinLearnSpan) {
        throw ConfigError("edges.window_length must be >= 3600 s");
    }
}

DisaggregationEstimate OnlinePipeline::push(const PowerSample& sample) {
    if (any_sample_) {
        if (sample.timestamp <= last_timestamp_) {
            throw OrderingError("sample timestamp " + std::to_string(sample.timestamp) +
                                " does not advance past " + std::to_string(last_timestamp_));
        }
        const bool window_full =
            sample.timestamp - window_start_ >= config_.edges.window_length;
        const bool gap = sample.timestamp - last_timestamp_ > 1;
        if (window_full || gap) {
            close_window();
            window_start_ = sample.timestamp;
        }
    } else {
        any_sample_ = true;
        window_start_ = sample.timestamp;
    }
    last_timestamp_ = sample.timestamp;
    window_.push_back(sample);

    DisaggregationEstimate estimate = filter_.step(sample.timestamp, sample.power);
    for (const ApplianceEstimate& appliance : estimate.per_appliance) {
        if (appliance.on) {
            window_energy_ws_[appliance.id] += appliance.estimated_power;
            window_on_seconds_[appliance.id] += 1;
        }
    }
    return estimate;
}

void OnlinePipeline::close_window() {
    if (window_.empty()) {
        return;
    }
    // A window cut short by a gap can be too thin to learn from; skip those
    // below one hour of span, keeping their unmatched edges out as well.
    const std::int64_t span = window_.back().timestamp - window_.front().timestamp + 1;
    const int day = day_of(window_start_);
    if (span >= kMinLearnSpan &&
        static_cast<std::size_t>(config_.filter.median_window) <= window_.size()) {
        std::vector<double> power(window_.size());
        for (std::size_t i = 0; i < window_.size(); ++i) {
            power[i] = window_[i].power;
        }
        const std::vector<double> filtered = smooth(power, config_.filter);
        std::vector<PowerSample> filtered_samples(window_.size());
        for (std::size_t i = 0; i < window_.size(); ++i) {
            filtered_samples[i] = {window_[i].timestamp, filtered[i]};
        }

        std::vector<EdgeEvent> edges = std::move(carried_edges_);
        carried_edges_.clear();
        const std::vector<EdgeEvent> fresh = detect_edges(filtered_samples, config_.edges);
        edges.insert(edges.end(), fresh.begin(), fresh.end());

        PairingResult pairing = pair_edges(edges, config_.edges);
        // Fresh unmatched edges survive into the next window once; anything
        // still unmatched after that expires.
        for (const EdgeEvent& edge : pairing.unmatched) {
            if (edge.time >= window_.front().timestamp) {
                carried_edges_.push_back(edge);
            }
        }

        const StateHistogram hist = build_histogram(pairing.pairs);
        const std::vector<PowerState> states = segment(hist, config_.cluster);

        auto& day_states = detected_states_per_day_[day];
        for (const PowerState& state : states) {
            day_states.push_back(state.nominal_power);
        }

        for (const auto& [id, energy_ws] : window_energy_ws_) {
            db_.record_usage(id, day, energy_ws / 3.6e6, window_on_seconds_[id]);
        }
        reports_.push_back(db_.update(states, day));
        filter_.rebind(compose_fhmm(db_));
    } else {
        carried_edges_.clear();
    }
    window_energy_ws_.clear();
    window_on_seconds_.clear();
    window_.clear();
}

void OnlinePipeline::finish() {
    close_window();
}

RunResult run_online(const std::vector<PowerSample>& trace, const PipelineConfig& config,
                     ApplianceDatabase initial_db,
                     const std::function<void(const DisaggregationEstimate&)>& sink) {
    OnlinePipeline pipeline(config, std::move(initial_db));
    for (const PowerSample& sample : trace) {
        sink(pipeline.push(sample));
    }
    pipeline.finish();
    return {pipeline.database(), pipeline.reports(), pipeline.detected_states_per_day()};
}

RunResult run_online(const std::vector<PowerSample>& trace, const PipelineConfig& config,
                     ApplianceDatabase initial_db,
                     std::vector<DisaggregationEstimate>& estimates) {
    estimates.reserve(estimates.size() + trace.size());
    return run_online(trace, config, std::move(initial_db),
                      [&](const DisaggregationEstimate& e) { estimates.push_back(e); });
}

}  // namespace nilm
