#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dualcausal/train.hpp"
#include "dualcausal/world.hpp"

namespace dcl {

struct DatasetConfig {
    std::size_t num_episodes = 240;
    std::string path; // empty: sample fresh episodes from the world

    bool operator==(const DatasetConfig&) const = default;
};

struct EvalConfig {
    std::string checkpoint;

    bool operator==(const EvalConfig&) const = default;
};

struct SweepConfig {
    std::string parameter = "sta_layers";
    std::vector<std::size_t> values{0, 2, 4, 6, 8};

    bool operator==(const SweepConfig&) const = default;
};

struct AblationConfig {
    std::size_t train_episodes = 160;
    std::size_t eval_episodes = 80;

    bool operator==(const AblationConfig&) const = default;
};

// One plain-text configuration file drives every command; no environment
// variables. Unknown keys are rejected at every level.
struct RunConfig {
    bool has_world = false;
    WorldSpec world;
    DatasetConfig dataset;
    TrainConfig train;
    EvalConfig eval;
    SweepConfig sweep;
    AblationConfig ablation;
    std::string output_dir = "out";
};

bool operator==(const TrainConfig& a, const TrainConfig& b);
bool operator==(const RunConfig& a, const RunConfig& b);

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

RunConfig parse_run_config(const nlohmann::json& doc);
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

// Missing file -> IoError; malformed JSON -> ParseError; unknown key or type
// mismatch -> ValidationError naming the offender. Referenced input paths
// (dataset.path, eval.checkpoint) must exist at parse time.
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

} // namespace dcl
