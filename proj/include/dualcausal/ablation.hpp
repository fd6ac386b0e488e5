#pragma once

#include <map>
#include <string>
#include <vector>

#include "dualcausal/metrics.hpp"
#include "dualcausal/train.hpp"

namespace dcl {

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double acc1 = 0.0;
    double acc5 = 0.0;
    double map = 0.0;
};

struct VariantOutcome {
    MetricsReport single_report;
    MetricsReport multi_report;
};

struct AblationResult {
    std::vector<AblationRow> rows; // baseline, tci_only, vci_only, full
    std::map<std::string, VariantOutcome> outcomes;
    std::uint64_t split_hash = 0; // shared train/eval manifest hash
};

// Trains one single-label and one multi-label model per variant on one shared
// train/eval split sampled from the world; Acc@k comes from the single-label
// model and mAP from the multi-label model. Split identity across variants is
// checked by hash.
AblationResult run_ablation(const World& world, const TrainConfig& base,
                            std::size_t train_episodes, std::size_t eval_episodes);

std::string ablation_table_csv(const std::vector<AblationRow>& rows);

struct SweepRow {
    std::string parameter;
    std::size_t value = 0;
    double acc1 = 0.0;
    double acc5 = 0.0;
    double map = 0.0;
};

// parameter is "sta_layers" (encoder depth) or "frames" (episode length);
// the world is rebuilt per value when the episode length changes.
std::vector<SweepRow> run_sweep(const WorldSpec& spec, const TrainConfig& base,
                                const std::string& parameter,
                                const std::vector<std::size_t>& values,
                                std::size_t train_episodes, std::size_t eval_episodes);

std::string sweep_table_csv(const std::vector<SweepRow>& rows);

// Delimited metrics table with the fixed header and one row.
std::string metrics_csv(const MetricsReport& report, const std::string& variant, std::uint64_t seed);

// Labeled grid for downstream plotting: header row of column labels, one
// labeled row per matrix row.
std::string matrix_csv(const Tensor& matrix, const std::string& row_prefix,
                       const std::string& col_prefix);

} // namespace dcl
