#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nilm/appliance_db.hpp"
#include "nilm/config.hpp"
#include "nilm/errors.hpp"
#include "nilm/evaluation.hpp"
#include "nilm/pipeline.hpp"
#include "nilm/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw nilm::InputError("cannot open " + path.string() + " for writing");
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw nilm::InputError("write failed: " + path.string());
    }
}

bool looks_like_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw nilm::InputError("cannot open " + path);
    }
    std::string line;
    std::getline(in, line);
    return line.rfind("timestamp", 0) == 0;
}

// Accepts either one headered CSV (extra columns ignored) or a set of
// two-column channel files that are resampled and summed. Channel input
// keeps the per-appliance series so `run` can write them out as truth.
nilm::GroundTruthTrace load_input_trace(const std::vector<std::string>& inputs,
                                        std::vector<std::size_t> channels) {
    if (inputs.empty()) {
        throw nilm::ConfigError("at least one --input file is required");
    }
    if (looks_like_csv(inputs[0])) {
        if (inputs.size() > 1) {
            throw nilm::ConfigError("CSV input supports exactly one file");
        }
        nilm::GroundTruthTrace trace;
        trace.samples = nilm::read_aggregate_csv(inputs[0]);
        nilm::validate_trace(trace.samples, true);
        return trace;
    }
    if (channels.empty()) {
        channels.resize(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            channels[i] = i;
        }
    }
    auto trace = nilm::load_channel_files(inputs, channels);
    nilm::validate_trace(trace.samples, true);
    if (trace.clamped_negative_readings > 0) {
        std::cerr << "note: clamped " << trace.clamped_negative_readings
                  << " negative readings to 0 W\n";
    }
    return trace;
}

nilm::PipelineConfig load_config_or_default(const std::string& path) {
    if (path.empty()) {
        return {};
    }
    return nilm::load_pipeline_config(path);
}

int cmd_synth(const std::string& specs_path, int days, std::uint64_t seed,
              const std::string& out_dir) {
    const auto specs = nilm::load_appliance_specs(specs_path);
    const auto trace = nilm::generate_synthetic(specs, days, seed);
    fs::create_directories(out_dir);
    nilm::write_aggregate_csv((fs::path(out_dir) / "aggregate.csv").string(), trace.samples);
    nilm::write_ground_truth_csv((fs::path(out_dir) / "ground_truth.csv").string(), trace);
    std::cout << "wrote " << trace.samples.size() << " samples for " << specs.size()
              << " appliances (noise stddev " << fmt(trace.noise_stddev) << " W) to "
              << out_dir << "\n";
    return 0;
}

std::string update_reports_csv(const std::vector<nilm::UpdateReport>& reports) {
    std::string body = "day,created,merged,pruned\n";
    for (const auto& report : reports) {
        body += std::to_string(report.day) + ',' + std::to_string(report.created.size()) +
                ',' + std::to_string(report.merged.size()) + ',' +
                std::to_string(report.pruned.size()) + '\n';
    }
    return body;
}

std::string detected_states_csv(const std::map<int, std::vector<double>>& per_day) {
    std::string body = "day,nominal_power_w\n";
    for (const auto& [day, states] : per_day) {
        for (double power : states) {
            body += std::to_string(day) + ',' + fmt(power) + '\n';
        }
    }
    return body;
}

int cmd_detect_states(const std::vector<std::string>& inputs,
                      const std::vector<std::size_t>& channels,
                      const std::string& config_path, const std::string& out_dir) {
    nilm::PipelineConfig config = load_config_or_default(config_path);
    const auto trace = load_input_trace(inputs, channels);
    // Only the learning path matters here; a single particle makes the
    // classifier side of the pipeline cost nothing.
    config.pf.particle_count = 1;
    nilm::RunResult result =
        nilm::run_online(trace.samples, config, nilm::ApplianceDatabase(config.db),
                         [](const nilm::DisaggregationEstimate&) {});
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "detected_states.csv",
               detected_states_csv(result.detected_states_per_day));
    write_file(fs::path(out_dir) / "update_reports.csv", update_reports_csv(result.reports));
    nilm::save_database(result.database, (fs::path(out_dir) / "database.txt").string());
    std::cout << "windows: " << result.reports.size()
              << " | models: " << result.database.models().size() << "\n";
    for (const auto& model : result.database.models()) {
        std::cout << "  model " << model.id << ": " << fmt(model.on_power) << " W, seen "
                  << model.metadata.total_appearances() << "x\n";
    }
    return 0;
}

int cmd_run(const std::vector<std::string>& inputs, const std::vector<std::size_t>& channels,
            const std::string& config_path, const std::string& out_dir, std::int64_t seed,
            const std::string& format, const std::string& initial_db_path) {
    nilm::PipelineConfig config = load_config_or_default(config_path);
    if (seed >= 0) {
        config.pf.rng_seed = static_cast<std::uint64_t>(seed);
    }
    const auto trace = load_input_trace(inputs, channels);
    nilm::ApplianceDatabase db = initial_db_path.empty()
                                     ? nilm::ApplianceDatabase(config.db)
                                     : nilm::load_database(initial_db_path);

    fs::create_directories(out_dir);
    const bool jsonl = format == "jsonl";
    const fs::path estimates_path =
        fs::path(out_dir) / (jsonl ? "estimates.jsonl" : "estimates.csv");
    const fs::path tmp_path = estimates_path.string() + ".tmp";

    double total_energy_ws = 0.0;
    nilm::RunResult result;
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) {
            throw nilm::InputError("cannot open " + tmp_path.string() + " for writing");
        }
        if (!jsonl) {
            out << "timestamp,appliance_id,on_probability,decided_state,estimated_power_w\n";
        }
        std::string row;
        const auto sink = [&](const nilm::DisaggregationEstimate& estimate) {
            total_energy_ws += estimate.total_estimated_power;
            for (const auto& appliance : estimate.per_appliance) {
                row.clear();
                if (jsonl) {
                    row += R"({"type":"estimate","timestamp":)";
                    row += std::to_string(estimate.timestamp);
                    row += R"(,"appliance_id":)";
                    row += std::to_string(appliance.id);
                    row += R"(,"on_probability":)";
                    row += fmt(appliance.on_probability);
                    row += R"(,"decided_state":")";
                    row += appliance.on ? "on" : "off";
                    row += R"(","estimated_power_w":)";
                    row += fmt(appliance.estimated_power);
                    row += "}\n";
                } else {
                    row += std::to_string(estimate.timestamp);
                    row += ',';
                    row += std::to_string(appliance.id);
                    row += ',';
                    row += fmt(appliance.on_probability);
                    row += ',';
                    row += appliance.on ? "on" : "off";
                    row += ',';
                    row += fmt(appliance.estimated_power);
                    row += '\n';
                }
                out << row;
            }
        };
        try {
            result = nilm::run_online(trace.samples, config, std::move(db), sink);
        } catch (...) {
            out.close();
            fs::remove(tmp_path);
            throw;
        }
        if (!out) {
            throw nilm::InputError("write failed: " + tmp_path.string());
        }
    }
    fs::rename(tmp_path, estimates_path);

    nilm::save_database(result.database, (fs::path(out_dir) / "database.txt").string());
    write_file(fs::path(out_dir) / "update_reports.csv", update_reports_csv(result.reports));
    write_file(fs::path(out_dir) / "detected_states.csv",
               detected_states_csv(result.detected_states_per_day));
    if (!trace.per_appliance.empty()) {
        nilm::write_ground_truth_csv((fs::path(out_dir) / "ground_truth.csv").string(),
                                     trace);
    }
    std::cout << "models: " << result.database.models().size()
              << " | estimated energy: " << fmt(total_energy_ws / 3.6e6) << " kWh\n";
    return 0;
}

struct EstimateRow {
    std::int64_t timestamp;
    std::uint64_t id;
    double power;
};

std::vector<EstimateRow> read_estimate_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw nilm::InputError("cannot open " + path);
    }
    std::vector<EstimateRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool jsonl = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        if (lineno == 1) {
            jsonl = line.front() == '{';
            if (!jsonl) {
                if (line.rfind("timestamp,appliance_id", 0) != 0) {
                    throw nilm::ParseError(where + ": not an estimates file");
                }
                continue;
            }
        }
        if (jsonl) {
            nlohmann::json record;
            try {
                record = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw nilm::ParseError(where + ": " + e.what());
            }
            if (record.value("type", "") != "estimate") {
                continue;
            }
            rows.push_back({record.at("timestamp").get<std::int64_t>(),
                            record.at("appliance_id").get<std::uint64_t>(),
                            record.at("estimated_power_w").get<double>()});
        } else {
            EstimateRow row{};
            char state[16] = {0};
            double probability = 0.0;
            if (std::sscanf(line.c_str(), "%ld,%lu,%lf,%15[^,],%lf", &row.timestamp,
                            &row.id, &probability, state, &row.power) != 5) {
                throw nilm::ParseError(where + ": expected 5 columns");
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::map<int, std::vector<double>> read_detected_states_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw nilm::InputError("cannot open " + path);
    }
    std::map<int, std::vector<double>> per_day;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("day,", 0) == 0)) {
            continue;
        }
        int day = 0;
        double power = 0.0;
        if (std::sscanf(line.c_str(), "%d,%lf", &day, &power) != 2) {
            throw nilm::ParseError(path + ":" + std::to_string(lineno) +
                                   ": expected 'day,nominal_power_w'");
        }
        per_day[day].push_back(power);
    }
    return per_day;
}

int cmd_evaluate(const std::string& estimates_path, const std::string& ground_truth_path,
                 const std::string& reference_path, const std::string& detected_path,
                 std::int64_t skip_seconds, double threshold, const std::string& out_dir) {
    const auto reference = nilm::load_reference_states(reference_path);
    nilm::GroundTruthTrace truth = nilm::read_ground_truth_csv(ground_truth_path);
    const auto rows = read_estimate_rows(estimates_path);

    // Assemble the columnar estimate stream on the ground-truth grid; seconds
    // with no estimate rows (an empty model set) count as all-off.
    nilm::EstimateSeries series;
    std::map<std::uint64_t, std::size_t> channel_of;
    series.timestamps.reserve(truth.samples.size());
    series.total.assign(truth.samples.size(), 0.0);
    for (const auto& sample : truth.samples) {
        series.timestamps.push_back(sample.timestamp);
    }
    std::size_t cursor = 0;
    for (const auto& row : rows) {
        while (cursor < series.timestamps.size() && series.timestamps[cursor] < row.timestamp) {
            ++cursor;
        }
        if (cursor >= series.timestamps.size() ||
            series.timestamps[cursor] != row.timestamp) {
            throw nilm::AlignmentError("estimate timestamp " + std::to_string(row.timestamp) +
                                       " not in ground truth");
        }
        auto [it, inserted] = channel_of.try_emplace(row.id, series.channels.size());
        if (inserted) {
            series.channels.push_back(
                {row.id, 0.0, std::vector<double>(series.timestamps.size(), 0.0)});
        }
        auto& channel = series.channels[it->second];
        channel.power[cursor] = row.power;
        if (row.power > 0.0) {
            channel.on_power = row.power;
        }
        series.total[cursor] += row.power;
    }

    if (skip_seconds > 0) {
        std::size_t k = 0;
        const std::int64_t cutoff = truth.samples.front().timestamp + skip_seconds;
        while (k < series.timestamps.size() && series.timestamps[k] < cutoff) {
            ++k;
        }
        series.timestamps.erase(series.timestamps.begin(),
                                series.timestamps.begin() + static_cast<std::ptrdiff_t>(k));
        series.total.erase(series.total.begin(),
                           series.total.begin() + static_cast<std::ptrdiff_t>(k));
        for (auto& channel : series.channels) {
            channel.power.erase(channel.power.begin(),
                                channel.power.begin() + static_cast<std::ptrdiff_t>(k));
        }
        truth.samples.erase(truth.samples.begin(),
                            truth.samples.begin() + static_cast<std::ptrdiff_t>(k));
        for (auto& appliance : truth.per_appliance) {
            appliance.samples.erase(
                appliance.samples.begin(),
                appliance.samples.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }

    const auto detected = detected_path.empty() ? std::map<int, std::vector<double>>{}
                                                : read_detected_states_csv(detected_path);
    const nilm::EvaluationReport report =
        nilm::energy_report(series, truth, reference, threshold, detected);

    fs::create_directories(out_dir);
    std::string summary;
    summary += "total_energy_estimated_kwh " + fmt(report.total_energy_estimated_kwh) + '\n';
    summary += "total_energy_actual_kwh " + fmt(report.total_energy_actual_kwh) + '\n';
    summary += "energy_error_fraction " + fmt(report.energy_error_fraction) + '\n';
    for (const auto& [label, value] : report.per_appliance_rmse) {
        summary += "rmse_w " + label + ' ' + fmt(value) + '\n';
    }
    write_file(fs::path(out_dir) / "report.txt", summary);

    std::string shares = "label,estimated_share\n";
    for (const auto& [label, share] : report.energy_shares) {
        shares += label + ',' + fmt(share) + '\n';
    }
    write_file(fs::path(out_dir) / "shares.csv", shares);

    std::string actual_shares = "label,actual_share\n";
    for (const auto& [label, share] : report.actual_energy_shares) {
        actual_shares += label + ',' + fmt(share) + '\n';
    }
    write_file(fs::path(out_dir) / "actual_shares.csv", actual_shares);

    if (!detected.empty()) {
        std::string assignable = "day,assignable,unassignable\n";
        for (const auto& [day, count] : report.states_assignable_per_day) {
            assignable += std::to_string(day) + ',' + std::to_string(count) + ',' +
                          std::to_string(report.states_unassignable_per_day.at(day)) + '\n';
        }
        write_file(fs::path(out_dir) / "assignable.csv", assignable);
    }

    const double unknown_share = report.energy_shares.back().second;
    std::cout << "energy: " << fmt(report.total_energy_estimated_kwh) << " kWh estimated vs "
              << fmt(report.total_energy_actual_kwh) << " kWh actual (error "
              << fmt(report.energy_error_fraction * 100.0) << "%) | unknown share "
              << fmt(unknown_share * 100.0) << "%\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised appliance load disaggregation for 1 Hz power streams"};
    app.require_subcommand(1);

    std::string specs_path;
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::string initial_db_path;
    std::string estimates_path;
    std::string ground_truth_path;
    std::string reference_path;
    std::string detected_path;
    std::vector<std::string> inputs;
    std::vector<std::size_t> channels;
    int days = 1;
    std::int64_t seed_override = -1;
    std::uint64_t synth_seed = 0;
    std::int64_t skip_seconds = 0;
    double threshold = 75.0;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic household trace");
    synth->add_option("--specs", specs_path, "Appliance spec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("--days", days, "Days to generate")->required()->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* detect = app.add_subcommand("detect-states", "Learn appliance power states");
    detect->add_option("--input", inputs, "Trace CSV or channel files")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--channels", channels, "Channel indices into the input list");
    detect->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    detect->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* run = app.add_subcommand("run", "Disaggregate a trace online");
    run->add_option("--input", inputs, "Trace CSV or channel files")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--channels", channels, "Channel indices into the input list");
    run->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed_override, "Particle filter seed override");
    run->add_option("--format", format, "Estimate stream format")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    run->add_option("--initial-db", initial_db_path, "Warm-start database")
        ->check(CLI::ExistingFile);

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score estimates against ground truth");
    evaluate->add_option("--estimates", estimates_path, "Estimate stream from 'run'")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--ground-truth", ground_truth_path, "Ground-truth CSV from 'synth'")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--reference-states", reference_path, "Reference wattages, one per line")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--detected-states", detected_path, "detected_states.csv from 'run'")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--skip-seconds", skip_seconds, "Ignore the first N seconds")
        ->check(CLI::NonNegativeNumber);
    evaluate->add_option("--threshold-w", threshold, "State mapping distance threshold");
    evaluate->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            return cmd_synth(specs_path, days, synth_seed, out_dir);
        }
        if (detect->parsed()) {
            return cmd_detect_states(inputs, channels, config_path, out_dir);
        }
        if (run->parsed()) {
            return cmd_run(inputs, channels, config_path, out_dir, seed_override, format,
                           initial_db_path);
        }
        return cmd_evaluate(estimates_path, ground_truth_path, reference_path, detected_path,
                            skip_seconds, threshold, out_dir);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const nilm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nilm::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const nilm::AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << "\n";
        return 2;
    } catch (const nilm::OrderingError& e) {
        std::cerr << "ordering error: " << e.what() << "\n";
        return 2;
    } catch (const nilm::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
