#include "nilm/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nilm/errors.hpp"
#include "text_util.hpp"

namespace nilm {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

void require_object(const json& value, const std::string& path) {
    if (!value.is_object()) {
        throw ConfigError(path + ": expected an object");
    }
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* candidate : allowed) {
            if (key == candidate) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(path + "." + key + ": unknown field");
        }
    }
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& value = obj.at(key);
    if (!value.is_number()) {
        throw ConfigError(path + "." + key + ": expected a number");
    }
    return value.get<double>();
}

std::int64_t get_int(const json& obj, const std::string& path, const char* key,
                     std::int64_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& value = obj.at(key);
    if (!value.is_number_integer()) {
        throw ConfigError(path + "." + key + ": expected an integer");
    }
    return value.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& value = obj.at(key);
    if (!value.is_string()) {
        throw ConfigError(path + "." + key + ": expected a string");
    }
    return value.get<std::string>();
}

void require(bool ok, const std::string& path, const char* message) {
    if (!ok) {
        throw ConfigError(path + ": " + message);
    }
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& source) {
    const json root = parse_json(json_text, source);
    require_object(root, source);
    check_keys(root, source, {"filter", "edges", "cluster", "db", "pf"});

    PipelineConfig config;
    if (root.contains("filter")) {
        const json& f = root.at("filter");
        const std::string path = source + ":filter";
        require_object(f, path);
        check_keys(f, path, {"median_window", "smoothing", "smoothing_window"});
        config.filter.median_window =
            static_cast<int>(get_int(f, path, "median_window", config.filter.median_window));
        require(config.filter.median_window >= 3 && config.filter.median_window % 2 == 1,
                path + ".median_window", "must be odd and >= 3");
        const std::string smoothing = get_string(f, path, "smoothing", "none");
        if (smoothing == "none") {
            config.filter.smoothing = Smoothing::none;
        } else if (smoothing == "moving_average") {
            config.filter.smoothing = Smoothing::moving_average;
        } else {
            throw ConfigError(path + ".smoothing: expected 'none' or 'moving_average'");
        }
        config.filter.smoothing_window = static_cast<int>(
            get_int(f, path, "smoothing_window", config.filter.smoothing_window));
        require(config.filter.smoothing_window >= 1, path + ".smoothing_window",
                "must be >= 1");
    }

    if (root.contains("edges")) {
        const json& e = root.at("edges");
        const std::string path = source + ":edges";
        require_object(e, path);
        check_keys(e, path,
                   {"ma_window", "edge_threshold_w", "pair_tolerance_w",
                    "pair_tolerance_fraction", "window_length_s"});
        config.edges.ma_window =
            static_cast<int>(get_int(e, path, "ma_window", config.edges.ma_window));
        require(config.edges.ma_window >= 1, path + ".ma_window", "must be >= 1");
        config.edges.edge_threshold =
            get_double(e, path, "edge_threshold_w", config.edges.edge_threshold);
        require(config.edges.edge_threshold > 0.0, path + ".edge_threshold_w",
                "must be > 0");
        config.edges.pair_tolerance_watts =
            get_double(e, path, "pair_tolerance_w", config.edges.pair_tolerance_watts);
        require(config.edges.pair_tolerance_watts >= 0.0, path + ".pair_tolerance_w",
                "must be >= 0");
        config.edges.pair_tolerance_fraction = get_double(
            e, path, "pair_tolerance_fraction", config.edges.pair_tolerance_fraction);
        require(config.edges.pair_tolerance_fraction >= 0.0,
                path + ".pair_tolerance_fraction", "must be >= 0");
        config.edges.window_length =
            get_int(e, path, "window_length_s", config.edges.window_length);
        require(config.edges.window_length >= 3600, path + ".window_length_s",
                "must be >= 3600");
    }

    if (root.contains("cluster")) {
        const json& c = root.at("cluster");
        const std::string path = source + ":cluster";
        require_object(c, path);
        check_keys(c, path, {"min_support", "gap_bins"});
        config.cluster.min_support =
            static_cast<int>(get_int(c, path, "min_support", config.cluster.min_support));
        require(config.cluster.min_support >= 1, path + ".min_support", "must be >= 1");
        config.cluster.gap_bins =
            static_cast<int>(get_int(c, path, "gap_bins", config.cluster.gap_bins));
        require(config.cluster.gap_bins >= 1, path + ".gap_bins", "must be >= 1");
    }

    if (root.contains("db")) {
        const json& d = root.at("db");
        const std::string path = source + ":db";
        require_object(d, path);
        check_keys(d, path,
                   {"merge_threshold_w", "prune_min_total_appearances", "prune_stale_days",
                    "ema_weight", "default_stay_prob"});
        config.db.merge_threshold =
            get_double(d, path, "merge_threshold_w", config.db.merge_threshold);
        require(config.db.merge_threshold > 0.0, path + ".merge_threshold_w", "must be > 0");
        config.db.prune_min_total_appearances = static_cast<int>(get_int(
            d, path, "prune_min_total_appearances", config.db.prune_min_total_appearances));
        require(config.db.prune_min_total_appearances >= 0,
                path + ".prune_min_total_appearances", "must be >= 0");
        config.db.prune_stale_days = static_cast<int>(
            get_int(d, path, "prune_stale_days", config.db.prune_stale_days));
        require(config.db.prune_stale_days >= 0, path + ".prune_stale_days", "must be >= 0");
        config.db.ema_weight = get_double(d, path, "ema_weight", config.db.ema_weight);
        require(config.db.ema_weight > 0.0 && config.db.ema_weight <= 1.0,
                path + ".ema_weight", "must be in (0, 1]");
        config.db.default_stay_prob =
            get_double(d, path, "default_stay_prob", config.db.default_stay_prob);
        require(config.db.default_stay_prob > 0.0 && config.db.default_stay_prob < 1.0,
                path + ".default_stay_prob", "must be in (0, 1)");
    }

    if (root.contains("pf")) {
        const json& p = root.at("pf");
        const std::string path = source + ":pf";
        require_object(p, path);
        check_keys(p, path,
                   {"particle_count", "observation_noise_stddev_w", "resample_threshold",
                    "decision_threshold", "rng_seed"});
        const std::int64_t particles = get_int(p, path, "particle_count",
                                               static_cast<std::int64_t>(config.pf.particle_count));
        require(particles >= 1, path + ".particle_count", "must be >= 1");
        config.pf.particle_count = static_cast<std::size_t>(particles);
        config.pf.observation_noise_stddev = get_double(
            p, path, "observation_noise_stddev_w", config.pf.observation_noise_stddev);
        require(config.pf.observation_noise_stddev > 0.0,
                path + ".observation_noise_stddev_w", "must be > 0");
        config.pf.resample_threshold =
            get_double(p, path, "resample_threshold", config.pf.resample_threshold);
        require(config.pf.resample_threshold >= 0.0 && config.pf.resample_threshold <= 1.0,
                path + ".resample_threshold", "must be in [0, 1]");
        config.pf.decision_threshold =
            get_double(p, path, "decision_threshold", config.pf.decision_threshold);
        require(config.pf.decision_threshold > 0.0 && config.pf.decision_threshold < 1.0,
                path + ".decision_threshold", "must be in (0, 1)");
        const std::int64_t seed =
            get_int(p, path, "rng_seed", static_cast<std::int64_t>(config.pf.rng_seed));
        require(seed >= 0, path + ".rng_seed", "must be >= 0");
        config.pf.rng_seed = static_cast<std::uint64_t>(seed);
    }

    return config;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    return parse_pipeline_config(read_file(path), path);
}

std::vector<ApplianceSpec> parse_appliance_specs(const std::string& json_text,
                                                 const std::string& source) {
    const json root = parse_json(json_text, source);
    require_object(root, source);
    check_keys(root, source, {"appliances"});
    if (!root.contains("appliances") || !root.at("appliances").is_array()) {
        throw ConfigError(source + ".appliances: expected an array");
    }
    const json& list = root.at("appliances");
    if (list.empty()) {
        throw ConfigError(source + ".appliances: must not be empty");
    }
    std::vector<ApplianceSpec> specs;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = source + ".appliances[" + std::to_string(i) + "]";
        const json& item = list.at(i);
        require_object(item, path);
        check_keys(item, path,
                   {"label", "on_power_w", "mean_on_duration_s", "activations_per_day",
                    "noise_stddev_w"});
        ApplianceSpec spec;
        spec.label = get_string(item, path, "label", "");
        require(!spec.label.empty(), path + ".label", "required");
        if (!item.contains("on_power_w")) {
            throw ConfigError(path + ".on_power_w: required");
        }
        spec.on_power = get_double(item, path, "on_power_w", 0.0);
        require(spec.on_power > 0.0, path + ".on_power_w", "must be > 0");
        spec.mean_on_duration = get_double(item, path, "mean_on_duration_s", 600.0);
        require(spec.mean_on_duration >= 1.0, path + ".mean_on_duration_s", "must be >= 1");
        spec.activations_per_day = get_double(item, path, "activations_per_day", 1.0);
        require(spec.activations_per_day >= 0.0, path + ".activations_per_day",
                "must be >= 0");
        spec.noise_stddev = get_double(item, path, "noise_stddev_w", 0.0);
        require(spec.noise_stddev >= 0.0, path + ".noise_stddev_w", "must be >= 0");
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::vector<ApplianceSpec> load_appliance_specs(const std::string& path) {
    return parse_appliance_specs(read_file(path), path);
}

std::vector<double> load_reference_states(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::vector<double> states;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        const auto body = text::trim(line);
        if (body.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        const double watts = text::parse_double(body, where);
        if (!(watts > 0.0)) {
            throw ParseError(where + ": reference state must be > 0 W");
        }
        states.push_back(watts);
    }
    if (states.empty()) {
        throw ConfigError(path + ": no reference states");
    }
    return states;
}

}  // namespace nilm
