#include "nilm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nilm/errors.hpp"
#include "nilm/kernels.hpp"

namespace nilm {
namespace {

constexpr double kWattSecondsPerKwh = 3.6e6;

std::string watts_label(double watts) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%gW", watts);
    return buf;
}

double series_energy_kwh(const std::vector<double>& power) {
    return kernels::active_ops().sum(power.data(), power.size()) / kWattSecondsPerKwh;
}

// Median of the nonzero samples: the level this appliance actually runs at.
double typical_on_level(const std::vector<double>& power) {
    std::vector<double> on;
    for (double p : power) {
        if (p > 0.0) {
            on.push_back(p);
        }
    }
    if (on.empty()) {
        return 0.0;
    }
    const std::size_t mid = on.size() / 2;
    std::nth_element(on.begin(), on.begin() + static_cast<std::ptrdiff_t>(mid), on.end());
    return on[mid];
}

}  // namespace

StateMapping map_states(const std::vector<double>& detected,
                        const std::vector<double>& reference, double threshold) {
    if (reference.empty()) {
        throw ConfigError("reference state list is empty");
    }
    StateMapping mapping;
    mapping.distance_threshold = threshold;
    mapping.assignment.reserve(detected.size());
    for (double power : detected) {
        int best = -1;
        double best_distance = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < reference.size(); ++r) {
            const double distance = std::abs(power - reference[r]);
            const bool closer =
                distance < best_distance ||
                (distance == best_distance && best >= 0 &&
                 reference[r] < reference[static_cast<std::size_t>(best)]);
            if (closer) {
                best_distance = distance;
                best = static_cast<int>(r);
            }
        }
        if (best_distance <= threshold) {
            mapping.assignment.push_back(best);
            ++mapping.assignable;
        } else {
            mapping.assignment.push_back(-1);
            ++mapping.unassignable;
        }
    }
    return mapping;
}

double rmse(const std::vector<double>& estimated, const std::vector<double>& actual) {
    if (estimated.size() != actual.size()) {
        throw AlignmentError("series lengths differ: " + std::to_string(estimated.size()) +
                             " vs " + std::to_string(actual.size()));
    }
    if (estimated.empty()) {
        throw AlignmentError("cannot score empty series");
    }
    const double sum_sq = kernels::active_ops().sum_sq_diff(estimated.data(), actual.data(),
                                                            estimated.size());
    return std::sqrt(sum_sq / static_cast<double>(estimated.size()));
}

void EstimateSeries::append(const DisaggregationEstimate& estimate) {
    timestamps.push_back(estimate.timestamp);
    total.push_back(estimate.total_estimated_power);
    for (Channel& channel : channels) {
        channel.power.push_back(0.0);
    }
    for (const ApplianceEstimate& appliance : estimate.per_appliance) {
        Channel* channel = nullptr;
        for (Channel& existing : channels) {
            if (existing.id == appliance.id) {
                channel = &existing;
                break;
            }
        }
        if (channel == nullptr) {
            channels.push_back({appliance.id, 0.0, std::vector<double>(timestamps.size(), 0.0)});
            channel = &channels.back();
        }
        channel->power.back() = appliance.estimated_power;
        if (appliance.estimated_power > 0.0) {
            channel->on_power = appliance.estimated_power;
        }
    }
}

EvaluationReport energy_report(
    const EstimateSeries& estimates, const GroundTruthTrace& ground_truth,
    const std::vector<double>& reference_states, double mapping_threshold,
    const std::map<int, std::vector<double>>& detected_states_per_day) {
    if (estimates.timestamps.empty()) {
        throw InputError("no overlapping samples to evaluate");
    }
    if (estimates.timestamps.size() != ground_truth.samples.size()) {
        throw AlignmentError("estimate and ground-truth sample counts differ: " +
                             std::to_string(estimates.timestamps.size()) + " vs " +
                             std::to_string(ground_truth.samples.size()));
    }
    for (std::size_t i = 0; i < estimates.timestamps.size(); ++i) {
        if (estimates.timestamps[i] != ground_truth.samples[i].timestamp) {
            throw AlignmentError("timestamp mismatch at sample " + std::to_string(i));
        }
    }

    EvaluationReport report;
    report.total_energy_estimated_kwh = series_energy_kwh(estimates.total);
    {
        std::vector<double> aggregate(ground_truth.samples.size());
        for (std::size_t i = 0; i < aggregate.size(); ++i) {
            aggregate[i] = ground_truth.samples[i].power;
        }
        report.total_energy_actual_kwh = series_energy_kwh(aggregate);
    }
    if (report.total_energy_actual_kwh > 0.0) {
        report.energy_error_fraction =
            std::abs(report.total_energy_estimated_kwh - report.total_energy_actual_kwh) /
            report.total_energy_actual_kwh;
    } else {
        report.energy_error_fraction = report.total_energy_estimated_kwh > 0.0
                                           ? std::numeric_limits<double>::infinity()
                                           : 0.0;
    }

    // Estimated-energy shares per reference level.
    std::vector<double> channel_levels;
    channel_levels.reserve(estimates.channels.size());
    for (const auto& channel : estimates.channels) {
        channel_levels.push_back(channel.on_power);
    }
    std::vector<double> share_energy(reference_states.size() + 1, 0.0);  // last = unknown
    if (!channel_levels.empty()) {
        const StateMapping to_reference =
            map_states(channel_levels, reference_states, mapping_threshold);
        for (std::size_t c = 0; c < estimates.channels.size(); ++c) {
            const double kwh = series_energy_kwh(estimates.channels[c].power);
            const int slot = to_reference.assignment[c];
            share_energy[slot < 0 ? reference_states.size()
                                  : static_cast<std::size_t>(slot)] += kwh;
        }
    }
    const double estimated_total = report.total_energy_estimated_kwh;
    for (std::size_t r = 0; r < reference_states.size(); ++r) {
        report.energy_shares.push_back(
            {watts_label(reference_states[r]),
             estimated_total > 0.0 ? share_energy[r] / estimated_total : 0.0});
    }
    report.energy_shares.push_back(
        {"unknown",
         estimated_total > 0.0 ? share_energy[reference_states.size()] / estimated_total : 0.0});

    // Ground-truth shares and per-appliance RMSE.
    std::vector<double> gt_levels;
    std::vector<double> gt_energy;
    double gt_energy_total = 0.0;
    for (const ApplianceChannel& appliance : ground_truth.per_appliance) {
        std::vector<double> power(appliance.samples.size());
        for (std::size_t i = 0; i < power.size(); ++i) {
            power[i] = appliance.samples[i].power;
        }
        gt_levels.push_back(typical_on_level(power));
        gt_energy.push_back(series_energy_kwh(power));
        gt_energy_total += gt_energy.back();
    }
    for (std::size_t a = 0; a < ground_truth.per_appliance.size(); ++a) {
        report.actual_energy_shares.push_back(
            {ground_truth.per_appliance[a].label,
             gt_energy_total > 0.0 ? gt_energy[a] / gt_energy_total : 0.0});
    }
    if (!ground_truth.per_appliance.empty()) {
        const StateMapping to_appliance =
            channel_levels.empty() ? StateMapping{}
                                   : map_states(channel_levels, gt_levels, mapping_threshold);
        for (std::size_t a = 0; a < ground_truth.per_appliance.size(); ++a) {
            std::vector<double> estimated(estimates.timestamps.size(), 0.0);
            for (std::size_t c = 0; c < estimates.channels.size(); ++c) {
                if (c < to_appliance.assignment.size() &&
                    to_appliance.assignment[c] == static_cast<int>(a)) {
                    const auto& power = estimates.channels[c].power;
                    for (std::size_t i = 0; i < estimated.size(); ++i) {
                        estimated[i] += power[i];
                    }
                }
            }
            std::vector<double> actual(ground_truth.per_appliance[a].samples.size());
            for (std::size_t i = 0; i < actual.size(); ++i) {
                actual[i] = ground_truth.per_appliance[a].samples[i].power;
            }
            report.per_appliance_rmse.push_back(
                {ground_truth.per_appliance[a].label, rmse(estimated, actual)});
        }
    }

    for (const auto& [day, detected] : detected_states_per_day) {
        if (detected.empty()) {
            report.states_assignable_per_day[day] = 0;
            report.states_unassignable_per_day[day] = 0;
            continue;
        }
        const StateMapping mapping = map_states(detected, reference_states, mapping_threshold);
        report.states_assignable_per_day[day] = static_cast<std::uint32_t>(mapping.assignable);
        report.states_unassignable_per_day[day] =
            static_cast<std::uint32_t>(mapping.unassignable);
    }
    return report;
}

std::vector<ApplianceChannel> virtual_appliance_grouping(
    const std::vector<ApplianceChannel>& per_appliance, double merge_threshold) {
    if (per_appliance.empty()) {
        return {};
    }
    for (const ApplianceChannel& appliance : per_appliance) {
        if (appliance.samples.size() != per_appliance[0].samples.size()) {
            throw AlignmentError("per-appliance series lengths differ");
        }
    }

    std::vector<std::pair<double, std::size_t>> by_level;
    for (std::size_t a = 0; a < per_appliance.size(); ++a) {
        std::vector<double> power(per_appliance[a].samples.size());
        for (std::size_t i = 0; i < power.size(); ++i) {
            power[i] = per_appliance[a].samples[i].power;
        }
        by_level.push_back({typical_on_level(power), a});
    }
    std::sort(by_level.begin(), by_level.end());

    std::vector<ApplianceChannel> groups;
    for (std::size_t k = 0; k < by_level.size(); ++k) {
        const bool linked =
            k > 0 && by_level[k].first - by_level[k - 1].first < merge_threshold;
        const ApplianceChannel& member = per_appliance[by_level[k].second];
        if (!linked) {
            ApplianceChannel group;
            group.label = member.label;
            group.samples = member.samples;
            groups.push_back(std::move(group));
            continue;
        }
        ApplianceChannel& group = groups.back();
        group.label += "+" + member.label;
        for (std::size_t i = 0; i < group.samples.size(); ++i) {
            group.samples[i].power += member.samples[i].power;
        }
    }
    return groups;
}

}  // namespace nilm
