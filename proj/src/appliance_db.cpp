#include "nilm/appliance_db.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "nilm/errors.hpp"
#include "text_util.hpp"

namespace nilm {

std::uint64_t ApplianceMetadata::total_appearances() const {
    std::uint64_t total = 0;
    for (const auto& [day, count] : appearances_per_day) {
        total += count;
    }
    return total;
}

ApplianceModel make_hmm(const PowerState& state, double default_stay_prob) {
    if (!(state.nominal_power > 0.0)) {
        throw InputError("appliance on_power must be > 0, got " +
                         std::to_string(state.nominal_power));
    }
    if (!(default_stay_prob > 0.0) || !(default_stay_prob < 1.0)) {
        throw ConfigError("stay probability must be in (0, 1), got " +
                          std::to_string(default_stay_prob));
    }
    ApplianceModel model;
    model.on_power = state.nominal_power;
    const double s = default_stay_prob;
    model.transition = {{{s, 1.0 - s}, {1.0 - s, s}}};
    return model;
}

ApplianceDatabase::ApplianceDatabase(DbConfig config) : config_(config) {
    if (!(config_.merge_threshold > 0.0)) {
        throw ConfigError("merge_threshold must be > 0");
    }
    if (!(config_.ema_weight > 0.0) || config_.ema_weight > 1.0) {
        throw ConfigError("ema_weight must be in (0, 1]");
    }
}

UpdateReport ApplianceDatabase::update(const std::vector<PowerState>& states, int day) {
    if (day < current_day_) {
        throw OrderingError("update for day " + std::to_string(day) +
                            " after day " + std::to_string(current_day_));
    }
    current_day_ = day;

    UpdateReport report;
    report.day = day;

    // Canonical batch order makes the result independent of input order.
    std::vector<PowerState> batch = states;
    std::sort(batch.begin(), batch.end(), [](const PowerState& a, const PowerState& b) {
        if (a.nominal_power != b.nominal_power) {
            return a.nominal_power < b.nominal_power;
        }
        return a.support < b.support;
    });

    for (const PowerState& state : batch) {
        ApplianceModel* nearest = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (ApplianceModel& model : models_) {
            const double distance = std::abs(model.on_power - state.nominal_power);
            if (distance < best ||
                (distance == best && nearest != nullptr && model.on_power < nearest->on_power)) {
                best = distance;
                nearest = &model;
            }
        }
        if (nearest != nullptr && best < config_.merge_threshold) {
            nearest->on_power = (1.0 - config_.ema_weight) * nearest->on_power +
                                config_.ema_weight * state.nominal_power;
            nearest->metadata.last_seen_day = day;
            nearest->metadata.appearances_per_day[day] +=
                static_cast<std::uint32_t>(state.support);
            report.merged.push_back(nearest->id);
            collapse_collisions(report);
        } else {
            ApplianceModel model = make_hmm(state, config_.default_stay_prob);
            model.id = next_id_++;
            model.metadata.first_seen_day = day;
            model.metadata.last_seen_day = day;
            model.metadata.appearances_per_day[day] =
                static_cast<std::uint32_t>(state.support);
            report.created.push_back(model.id);
            models_.push_back(std::move(model));
        }
    }

    for (std::size_t i = models_.size(); i-- > 0;) {
        const ApplianceMetadata& meta = models_[i].metadata;
        const bool stale = meta.last_seen_day < day - config_.prune_stale_days;
        const bool rare = meta.total_appearances() <
                          static_cast<std::uint64_t>(config_.prune_min_total_appearances);
        if (stale && rare) {
            report.pruned.push_back(models_[i].id);
            models_.erase(models_.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }
    std::sort(report.pruned.begin(), report.pruned.end());

    const auto dedupe = [](std::vector<std::uint64_t>& ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    dedupe(report.merged);
    // A model created and then absorbed within this batch appears in neither list.
    std::erase_if(report.created, [&](std::uint64_t id) {
        return std::none_of(models_.begin(), models_.end(),
                            [&](const ApplianceModel& m) { return m.id == id; });
    });
    std::erase_if(report.merged, [&](std::uint64_t id) {
        return std::none_of(models_.begin(), models_.end(),
                            [&](const ApplianceModel& m) { return m.id == id; });
    });

    check_invariants();
    return report;
}

// Re-establishes pairwise separation after a nominal-power shift: repeatedly
// take the closest pair under the threshold and fold the model with fewer
// lifetime appearances (ties: higher id) into the other, blending powers by
// appearance weight.
void ApplianceDatabase::collapse_collisions(UpdateReport& report) {
    while (true) {
        std::size_t best_i = 0;
        std::size_t best_j = 0;
        double best = config_.merge_threshold;
        for (std::size_t i = 0; i < models_.size(); ++i) {
            for (std::size_t j = i + 1; j < models_.size(); ++j) {
                const double distance = std::abs(models_[i].on_power - models_[j].on_power);
                if (distance < best) {
                    best = distance;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i == best_j) {
            return;
        }
        ApplianceModel& a = models_[best_i];
        ApplianceModel& b = models_[best_j];
        const bool a_survives =
            a.metadata.total_appearances() != b.metadata.total_appearances()
                ? a.metadata.total_appearances() > b.metadata.total_appearances()
                : a.id < b.id;
        ApplianceModel& survivor = a_survives ? a : b;
        ApplianceModel& absorbed = a_survives ? b : a;

        const double wa = static_cast<double>(survivor.metadata.total_appearances());
        const double wb = static_cast<double>(absorbed.metadata.total_appearances());
        survivor.on_power = wa + wb > 0.0
                                ? (survivor.on_power * wa + absorbed.on_power * wb) / (wa + wb)
                                : (survivor.on_power + absorbed.on_power) / 2.0;

        ApplianceMetadata& meta = survivor.metadata;
        const ApplianceMetadata& other = absorbed.metadata;
        meta.first_seen_day = std::min(meta.first_seen_day, other.first_seen_day);
        meta.last_seen_day = std::max(meta.last_seen_day, other.last_seen_day);
        for (const auto& [d, c] : other.appearances_per_day) {
            meta.appearances_per_day[d] += c;
        }
        for (const auto& [d, e] : other.energy_kwh_per_day) {
            meta.energy_kwh_per_day[d] += e;
        }
        for (const auto& [d, s] : other.operational_seconds_per_day) {
            meta.operational_seconds_per_day[d] += s;
        }
        report.merged.push_back(survivor.id);

        const std::size_t absorbed_index = a_survives ? best_j : best_i;
        models_.erase(models_.begin() + static_cast<std::ptrdiff_t>(absorbed_index));
    }
}

void ApplianceDatabase::record_usage(std::uint64_t id, int day, double energy_kwh,
                                     std::int64_t operational_seconds) {
    for (ApplianceModel& model : models_) {
        if (model.id == id) {
            model.metadata.energy_kwh_per_day[day] += energy_kwh;
            model.metadata.operational_seconds_per_day[day] += operational_seconds;
            return;
        }
    }
}

void ApplianceDatabase::check_invariants() const {
    std::set<std::uint64_t> ids;
    for (const ApplianceModel& model : models_) {
        if (!ids.insert(model.id).second) {
            throw IntegrityError("duplicate model id " + std::to_string(model.id));
        }
        if (!(model.on_power > 0.0)) {
            throw IntegrityError("model " + std::to_string(model.id) +
                                 ": on_power not positive");
        }
        for (int row = 0; row < 2; ++row) {
            double sum = 0.0;
            for (int col = 0; col < 2; ++col) {
                const double p = model.transition[row][col];
                if (!(p >= 0.0) || !(p <= 1.0)) {
                    throw IntegrityError("model " + std::to_string(model.id) +
                                         ": transition entry outside [0, 1]");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw IntegrityError("model " + std::to_string(model.id) +
                                     ": transition row not stochastic");
            }
        }
        if (model.metadata.last_seen_day < model.metadata.first_seen_day) {
            throw IntegrityError("model " + std::to_string(model.id) +
                                 ": last_seen_day before first_seen_day");
        }
    }
    for (std::size_t i = 0; i < models_.size(); ++i) {
        for (std::size_t j = i + 1; j < models_.size(); ++j) {
            if (std::abs(models_[i].on_power - models_[j].on_power) <
                config_.merge_threshold) {
                throw IntegrityError("models " + std::to_string(models_[i].id) + " and " +
                                     std::to_string(models_[j].id) +
                                     " closer than the merge threshold");
            }
        }
    }
}

bool operator==(const ApplianceDatabase& a, const ApplianceDatabase& b) {
    const auto key = [](const ApplianceModel& m) { return m.id; };
    auto ma = a.models_;
    auto mb = b.models_;
    std::sort(ma.begin(), ma.end(),
              [&](const auto& x, const auto& y) { return key(x) < key(y); });
    std::sort(mb.begin(), mb.end(),
              [&](const auto& x, const auto& y) { return key(x) < key(y); });
    const auto model_equal = [](const ApplianceModel& x, const ApplianceModel& y) {
        return x.id == y.id && x.on_power == y.on_power && x.transition == y.transition &&
               x.metadata.first_seen_day == y.metadata.first_seen_day &&
               x.metadata.last_seen_day == y.metadata.last_seen_day &&
               x.metadata.appearances_per_day == y.metadata.appearances_per_day &&
               x.metadata.energy_kwh_per_day == y.metadata.energy_kwh_per_day &&
               x.metadata.operational_seconds_per_day == y.metadata.operational_seconds_per_day;
    };
    return std::equal(ma.begin(), ma.end(), mb.begin(), mb.end(), model_equal) &&
           a.current_day_ == b.current_day_ && a.next_id_ == b.next_id_ &&
           a.config_.merge_threshold == b.config_.merge_threshold &&
           a.config_.prune_min_total_appearances == b.config_.prune_min_total_appearances &&
           a.config_.prune_stale_days == b.config_.prune_stale_days &&
           a.config_.ema_weight == b.config_.ema_weight &&
           a.config_.default_stay_prob == b.config_.default_stay_prob;
}

Fhmm compose_fhmm(const ApplianceDatabase& db) {
    Fhmm fhmm;
    for (const ApplianceModel& model : db.models()) {
        fhmm.chains.push_back({model.id, model.on_power, model.transition});
    }
    std::sort(fhmm.chains.begin(), fhmm.chains.end(),
              [](const Fhmm::Chain& a, const Fhmm::Chain& b) {
                  if (a.on_power != b.on_power) {
                      return a.on_power < b.on_power;
                  }
                  return a.id < b.id;
              });
    return fhmm;
}

namespace {

void append_double17(std::string& out, double value) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
    out.append(buf, static_cast<std::size_t>(len));
}

template <typename Value>
void append_day_map(std::string& out, const char* name, const std::map<int, Value>& map) {
    out += name;
    for (const auto& [day, value] : map) {
        out += ' ';
        out += std::to_string(day);
        out += ':';
        if constexpr (std::is_floating_point_v<Value>) {
            append_double17(out, value);
        } else {
            out += std::to_string(value);
        }
    }
    out += '\n';
}

template <typename Value>
void parse_day_map(const std::vector<std::string_view>& tokens, std::map<int, Value>& map,
                   const std::string& where) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::size_t colon = tokens[i].find(':');
        if (colon == std::string_view::npos) {
            throw ParseError(where + ": expected day:value, got '" +
                             std::string(tokens[i]) + "'");
        }
        const int day =
            static_cast<int>(text::parse_int(tokens[i].substr(0, colon), where));
        const auto value_text = tokens[i].substr(colon + 1);
        if constexpr (std::is_floating_point_v<Value>) {
            map[day] = text::parse_double(value_text, where);
        } else {
            map[day] = static_cast<Value>(text::parse_int(value_text, where));
        }
    }
}

}  // namespace

void save_database(const ApplianceDatabase& db, const std::string& path) {
    std::string body = "nilmdb 1\n";
    const DbConfig& cfg = db.config();
    body += "merge_threshold ";
    append_double17(body, cfg.merge_threshold);
    body += "\nprune_min_total_appearances " + std::to_string(cfg.prune_min_total_appearances);
    body += "\nprune_stale_days " + std::to_string(cfg.prune_stale_days);
    body += "\nema_weight ";
    append_double17(body, cfg.ema_weight);
    body += "\ndefault_stay_prob ";
    append_double17(body, cfg.default_stay_prob);
    body += "\ncurrent_day " + std::to_string(db.current_day());
    body += "\nnext_id " + std::to_string(db.next_id_);
    body += "\nmodels " + std::to_string(db.models().size()) + "\n";
    for (const ApplianceModel& model : db.models()) {
        body += "model " + std::to_string(model.id) + ' ';
        append_double17(body, model.on_power);
        body += "\ntransition";
        for (int row = 0; row < 2; ++row) {
            for (int col = 0; col < 2; ++col) {
                body += ' ';
                append_double17(body, model.transition[row][col]);
            }
        }
        body += "\nseen " + std::to_string(model.metadata.first_seen_day) + ' ' +
                std::to_string(model.metadata.last_seen_day) + '\n';
        append_day_map(body, "appearances", model.metadata.appearances_per_day);
        append_day_map(body, "energy_kwh", model.metadata.energy_kwh_per_day);
        append_day_map(body, "op_seconds", model.metadata.operational_seconds_per_day);
        body += "end\n";
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot open " + path + " for writing");
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw InputError("write failed: " + path);
    }
}

ApplianceDatabase load_database(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(std::string(text::trim(line)));
    }
    std::size_t cursor = 0;
    const auto next_line = [&]() -> std::vector<std::string_view> {
        while (cursor < lines.size() && lines[cursor].empty()) {
            ++cursor;
        }
        if (cursor >= lines.size()) {
            throw ParseError(path + ": unexpected end of file");
        }
        return text::split_tokens(lines[cursor++]);
    };
    const auto where = [&]() { return path + ":" + std::to_string(cursor); };
    const auto expect_kv = [&](const char* key,
                               std::size_t min_tokens = 1) -> std::vector<std::string_view> {
        const auto tokens = next_line();
        if (tokens.empty() || tokens[0] != key || tokens.size() < min_tokens) {
            throw ParseError(where() + ": expected '" + key + "' record");
        }
        return tokens;
    };

    const auto magic = next_line();
    if (magic.size() != 2 || magic[0] != "nilmdb" || magic[1] != "1") {
        throw ParseError(path + ":1: not a nilmdb version 1 file");
    }

    DbConfig cfg;
    cfg.merge_threshold = text::parse_double(expect_kv("merge_threshold", 2)[1], where());
    cfg.prune_min_total_appearances = static_cast<int>(
        text::parse_int(expect_kv("prune_min_total_appearances", 2)[1], where()));
    cfg.prune_stale_days =
        static_cast<int>(text::parse_int(expect_kv("prune_stale_days", 2)[1], where()));
    cfg.ema_weight = text::parse_double(expect_kv("ema_weight", 2)[1], where());
    cfg.default_stay_prob = text::parse_double(expect_kv("default_stay_prob", 2)[1], where());

    ApplianceDatabase db(cfg);
    db.current_day_ =
        static_cast<int>(text::parse_int(expect_kv("current_day", 2)[1], where()));
    const std::uint64_t file_next_id =
        static_cast<std::uint64_t>(text::parse_int(expect_kv("next_id", 2)[1], where()));
    const std::int64_t model_count = text::parse_int(expect_kv("models", 2)[1], where());
    if (model_count < 0) {
        throw ParseError(where() + ": negative model count");
    }

    for (std::int64_t k = 0; k < model_count; ++k) {
        const auto header = expect_kv("model");
        if (header.size() != 3) {
            throw ParseError(where() + ": expected 'model <id> <on_power>'");
        }
        ApplianceModel model;
        model.id = static_cast<std::uint64_t>(text::parse_int(header[1], where()));
        model.on_power = text::parse_double(header[2], where());

        const auto transition = expect_kv("transition");
        if (transition.size() != 5) {
            throw ParseError(where() + ": expected 4 transition entries");
        }
        for (int e = 0; e < 4; ++e) {
            model.transition[e / 2][e % 2] =
                text::parse_double(transition[static_cast<std::size_t>(e) + 1], where());
        }

        const auto seen = expect_kv("seen");
        if (seen.size() != 3) {
            throw ParseError(where() + ": expected 'seen <first> <last>'");
        }
        model.metadata.first_seen_day = static_cast<int>(text::parse_int(seen[1], where()));
        model.metadata.last_seen_day = static_cast<int>(text::parse_int(seen[2], where()));

        parse_day_map(expect_kv("appearances"), model.metadata.appearances_per_day, where());
        parse_day_map(expect_kv("energy_kwh"), model.metadata.energy_kwh_per_day, where());
        parse_day_map(expect_kv("op_seconds"), model.metadata.operational_seconds_per_day,
                      where());
        expect_kv("end");
        db.models_.push_back(std::move(model));
        db.next_id_ = std::max(db.next_id_, model.id + 1);
    }
    if (file_next_id < db.next_id_) {
        throw IntegrityError(path + ": next_id " + std::to_string(file_next_id) +
                             " would reuse an existing model id");
    }
    db.next_id_ = file_next_id;

    db.check_invariants();
    return db;
}

}  // namespace nilm
