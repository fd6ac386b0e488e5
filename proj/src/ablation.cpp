#include "dualcausal/ablation.hpp"

#include <sstream>

#include "dualcausal/errors.hpp"
#include "dualcausal/jsonio.hpp"

namespace dcl {

namespace {

constexpr std::uint64_t kDataSeedSalt = 0x5b8dcafe1234beefULL;

std::vector<Variant> ablation_variants() {
    return {Variant::baseline, Variant::tci_only, Variant::vci_only, Variant::full};
}

} // namespace

AblationResult run_ablation(const World& world, const TrainConfig& base,
                            std::size_t train_episodes, std::size_t eval_episodes) {
    if (train_episodes == 0 || eval_episodes == 0) {
        throw InvalidArgumentError("run_ablation: train and eval sets must be nonempty");
    }
    const std::uint64_t data_seed = base.seed ^ kDataSeedSalt;
    const auto all = sample_episodes(world, train_episodes + eval_episodes, data_seed);
    const std::vector<Episode> train_set(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_episodes));
    const std::vector<Episode> eval_set(all.begin() + static_cast<std::ptrdiff_t>(train_episodes), all.end());

    const std::uint64_t train_hash = episodes_hash(train_set);
    const std::uint64_t eval_hash = episodes_hash(eval_set);

    AblationResult result;
    result.split_hash = train_hash ^ (eval_hash * 0x9e3779b97f4a7c15ULL);

    for (Variant variant : ablation_variants()) {
        TrainConfig cfg = base;
        cfg.variant = variant;

        cfg.mode = LabelMode::single_label;
        TrainResult single = train(world, train_set, cfg);
        MetricsReport single_report = evaluate(*single.model, eval_set, world.spec);
        single_report.loss_curve = single.loss_curve;

        cfg.mode = LabelMode::multi_label;
        TrainResult multi = train(world, train_set, cfg);
        MetricsReport multi_report = evaluate(*multi.model, eval_set, world.spec);
        multi_report.loss_curve = multi.loss_curve;

        // Every variant must have seen exactly the same split.
        if (episodes_hash(train_set) != train_hash || episodes_hash(eval_set) != eval_hash) {
            throw NumericError("run_ablation: split manifest hash changed between variants");
        }

        AblationRow row;
        row.variant = to_string(variant);
        row.seed = base.seed;
        row.acc1 = single_report.acc_at_1;
        row.acc5 = single_report.acc_at_5;
        row.map = multi_report.map;
        result.rows.push_back(row);
        result.outcomes[row.variant] = VariantOutcome{std::move(single_report), std::move(multi_report)};
    }
    return result;
}

std::string ablation_table_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "variant,seed,acc1,acc5,map\n";
    for (const AblationRow& r : rows) {
        os << r.variant << ',' << r.seed << ',' << jsonio::fmt_double(r.acc1) << ','
           << jsonio::fmt_double(r.acc5) << ',' << jsonio::fmt_double(r.map) << '\n';
    }
    return os.str();
}

std::vector<SweepRow> run_sweep(const WorldSpec& spec, const TrainConfig& base,
                                const std::string& parameter,
                                const std::vector<std::size_t>& values,
                                std::size_t train_episodes, std::size_t eval_episodes) {
    if (parameter != "sta_layers" && parameter != "frames") {
        throw ValidationError("sweep parameter must be \"sta_layers\" or \"frames\", got \"" +
                              parameter + "\"");
    }
    if (values.empty()) throw ValidationError("sweep: empty value list");
    std::vector<SweepRow> rows;
    for (std::size_t value : values) {
        WorldSpec ws = spec;
        TrainConfig cfg = base;
        if (parameter == "sta_layers") {
            cfg.sta_layers = value;
        } else {
            ws.frames_per_episode = value;
        }
        World world = build_world(ws);
        const std::uint64_t data_seed = cfg.seed ^ kDataSeedSalt;
        const auto all = sample_episodes(world, train_episodes + eval_episodes, data_seed);
        const std::vector<Episode> train_set(all.begin(),
                                             all.begin() + static_cast<std::ptrdiff_t>(train_episodes));
        const std::vector<Episode> eval_set(all.begin() + static_cast<std::ptrdiff_t>(train_episodes),
                                            all.end());

        cfg.mode = LabelMode::single_label;
        TrainResult single = train(world, train_set, cfg);
        MetricsReport single_report = evaluate(*single.model, eval_set, world.spec);

        cfg.mode = LabelMode::multi_label;
        TrainResult multi = train(world, train_set, cfg);
        MetricsReport multi_report = evaluate(*multi.model, eval_set, world.spec);

        SweepRow row;
        row.parameter = parameter;
        row.value = value;
        row.acc1 = single_report.acc_at_1;
        row.acc5 = single_report.acc_at_5;
        row.map = multi_report.map;
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "parameter,value,acc1,acc5,map\n";
    for (const SweepRow& r : rows) {
        os << r.parameter << ',' << r.value << ',' << jsonio::fmt_double(r.acc1) << ','
           << jsonio::fmt_double(r.acc5) << ',' << jsonio::fmt_double(r.map) << '\n';
    }
    return os.str();
}

std::string metrics_csv(const MetricsReport& report, const std::string& variant, std::uint64_t seed) {
    std::ostringstream os;
    os << "variant,seed,acc1,acc5,map\n";
    os << variant << ',' << seed << ',' << jsonio::fmt_double(report.acc_at_1) << ','
       << jsonio::fmt_double(report.acc_at_5) << ',' << jsonio::fmt_double(report.map) << '\n';
    return os.str();
}

std::string matrix_csv(const Tensor& matrix, const std::string& row_prefix,
                       const std::string& col_prefix) {
    if (matrix.rank() != 2) throw ShapeError("matrix_csv: expected a rank-2 tensor");
    std::ostringstream os;
    for (std::size_t c = 0; c < matrix.shape[1]; ++c) os << ',' << col_prefix << c;
    os << '\n';
    for (std::size_t r = 0; r < matrix.shape[0]; ++r) {
        os << row_prefix << r;
        for (std::size_t c = 0; c < matrix.shape[1]; ++c) os << ',' << jsonio::fmt_double(matrix(r, c));
        os << '\n';
    }
    return os.str();
}

} // namespace dcl
