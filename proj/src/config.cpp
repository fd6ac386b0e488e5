#include "dualcausal/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "dualcausal/errors.hpp"
#include "dualcausal/jsonio.hpp"

namespace dcl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ValidationError("config: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

template <class T>
void read_field(const json& j, const char* key, T& out, const char* type_name, bool (json::*is_type)() const) {
    if (!j.contains(key)) return;
    if (!((j[key]).*is_type)()) {
        throw ValidationError("config: field \"" + std::string(key) + "\" must be " + type_name);
    }
    out = j[key].get<T>();
}

void read_uint(const json& j, const char* key, std::size_t& out) {
    read_field(j, key, out, "a nonnegative integer", &json::is_number_unsigned);
}

void read_double(const json& j, const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
        throw ValidationError("config: field \"" + std::string(key) + "\" must be a number");
    }
    out = j[key].get<double>();
}

void read_string(const json& j, const char* key, std::string& out) {
    read_field(j, key, out, "a string", &json::is_string);
}

} // namespace

bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.epochs == b.epochs && a.batch_size == b.batch_size &&
           a.learning_rate == b.learning_rate && a.schedule == b.schedule && a.seed == b.seed &&
           a.variant == b.variant && a.sta_layers == b.sta_layers && a.heads == b.heads &&
           a.tau_text == b.tau_text && a.tau_vis == b.tau_vis && a.mode == b.mode;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.has_world == b.has_world && (!a.has_world || a.world == b.world) &&
           a.dataset == b.dataset && a.train == b.train && a.eval == b.eval && a.sweep == b.sweep &&
           a.ablation == b.ablation && a.output_dir == b.output_dir;
}

TrainConfig train_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config: train section must be an object");
    static const std::set<std::string> known{"epochs",     "batch_size", "learning_rate", "schedule",
                                             "seed",       "variant",    "sta_layers",    "heads",
                                             "tau_text",   "tau_vis",    "mode"};
    reject_unknown(j, known, "train section");
    TrainConfig cfg;
    read_uint(j, "epochs", cfg.epochs);
    read_uint(j, "batch_size", cfg.batch_size);
    read_double(j, "learning_rate", cfg.learning_rate);
    read_uint(j, "sta_layers", cfg.sta_layers);
    read_uint(j, "heads", cfg.heads);
    read_double(j, "tau_text", cfg.tau_text);
    read_double(j, "tau_vis", cfg.tau_vis);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("config: field \"seed\" must be a nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    std::string text;
    text.clear();
    read_string(j, "schedule", text);
    if (!text.empty()) cfg.schedule = schedule_from_string(text);
    text.clear();
    read_string(j, "variant", text);
    if (!text.empty()) cfg.variant = variant_from_string(text);
    text.clear();
    read_string(j, "mode", text);
    if (!text.empty()) cfg.mode = label_mode_from_string(text);
    cfg.validate();
    return cfg;
}

ordered_json train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["schedule"] = to_string(cfg.schedule);
    j["seed"] = cfg.seed;
    j["variant"] = to_string(cfg.variant);
    j["sta_layers"] = cfg.sta_layers;
    j["heads"] = cfg.heads;
    j["tau_text"] = cfg.tau_text;
    j["tau_vis"] = cfg.tau_vis;
    j["mode"] = to_string(cfg.mode);
    return j;
}

RunConfig parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
    static const std::set<std::string> known{"world", "dataset", "train", "eval",
                                             "sweep", "ablation", "output_dir"};
    reject_unknown(doc, known, "top level");

    RunConfig cfg;
    if (doc.contains("world")) {
        cfg.world = world_spec_from_json(doc["world"]);
        cfg.has_world = true;
    }
    if (doc.contains("dataset")) {
        const json& d = doc["dataset"];
        reject_unknown(d, {"num_episodes", "path"}, "dataset section");
        read_uint(d, "num_episodes", cfg.dataset.num_episodes);
        read_string(d, "path", cfg.dataset.path);
        if (cfg.dataset.num_episodes == 0) {
            throw ValidationError("config: dataset.num_episodes must be >= 1");
        }
    }
    if (doc.contains("train")) cfg.train = train_config_from_json(doc["train"]);
    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        reject_unknown(e, {"checkpoint"}, "eval section");
        read_string(e, "checkpoint", cfg.eval.checkpoint);
    }
    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        reject_unknown(s, {"parameter", "values"}, "sweep section");
        read_string(s, "parameter", cfg.sweep.parameter);
        if (s.contains("values")) {
            if (!s["values"].is_array()) throw ValidationError("config: sweep.values must be an array");
            cfg.sweep.values = s["values"].get<std::vector<std::size_t>>();
        }
        if (cfg.sweep.parameter != "sta_layers" && cfg.sweep.parameter != "frames") {
            throw ValidationError("config: sweep.parameter must be \"sta_layers\" or \"frames\"");
        }
    }
    if (doc.contains("ablation")) {
        const json& a = doc["ablation"];
        reject_unknown(a, {"train_episodes", "eval_episodes"}, "ablation section");
        read_uint(a, "train_episodes", cfg.ablation.train_episodes);
        read_uint(a, "eval_episodes", cfg.ablation.eval_episodes);
    }
    read_string(doc, "output_dir", cfg.output_dir);

    for (const std::string& path : {cfg.dataset.path, cfg.eval.checkpoint}) {
        if (!path.empty() && !std::filesystem::exists(path)) {
            throw ValidationError("config: referenced path does not exist: " + path);
        }
    }
    return cfg;
}

ordered_json run_config_to_json(const RunConfig& cfg) {
    ordered_json doc;
    if (cfg.has_world) {
        doc["world"] = ordered_json::parse(world_spec_to_json(cfg.world).dump());
    }
    ordered_json dataset;
    dataset["num_episodes"] = cfg.dataset.num_episodes;
    if (!cfg.dataset.path.empty()) dataset["path"] = cfg.dataset.path;
    doc["dataset"] = std::move(dataset);
    doc["train"] = train_config_to_json(cfg.train);
    if (!cfg.eval.checkpoint.empty()) doc["eval"] = ordered_json{{"checkpoint", cfg.eval.checkpoint}};
    ordered_json sweep;
    sweep["parameter"] = cfg.sweep.parameter;
    sweep["values"] = cfg.sweep.values;
    doc["sweep"] = std::move(sweep);
    ordered_json ablation;
    ablation["train_episodes"] = cfg.ablation.train_episodes;
    ablation["eval_episodes"] = cfg.ablation.eval_episodes;
    doc["ablation"] = std::move(ablation);
    doc["output_dir"] = cfg.output_dir;
    return doc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return parse_run_config(doc);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot open " + path + " for writing");
    jsonio::dump(run_config_to_json(cfg), out);
    out << '\n';
}

} // namespace dcl
