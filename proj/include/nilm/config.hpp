#pragma once

#include <string>
#include <vector>

#include "nilm/pipeline.hpp"
#include "nilm/trace_io.hpp"

namespace nilm {

/// Parses the JSON pipeline configuration (sections: filter, edges, cluster,
/// db, pf); every field is optional and defaults to the shipped values, but
/// unknown keys and out-of-range values raise ConfigError naming the full
/// field path.
PipelineConfig parse_pipeline_config(const std::string& json_text,
                                     const std::string& source = "config");
PipelineConfig load_pipeline_config(const std::string& path);

/// Parses the synthetic-household spec file: an `appliances` array of
/// objects with label, on_power_w, mean_on_duration_s, activations_per_day,
/// and noise_stddev_w.
std::vector<ApplianceSpec> parse_appliance_specs(const std::string& json_text,
                                                 const std::string& source = "specs");
std::vector<ApplianceSpec> load_appliance_specs(const std::string& path);

/// One reference wattage per line; '#' starts a comment.
std::vector<double> load_reference_states(const std::string& path);

}  // namespace nilm
