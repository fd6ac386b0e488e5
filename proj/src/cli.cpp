#include "dualcausal/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "dualcausal/ablation.hpp"
#include "dualcausal/errors.hpp"
#include "dualcausal/jsonio.hpp"
#include "dualcausal/scm.hpp"

namespace dcl {

namespace {

namespace fs = std::filesystem;

class ArtifactTracker {
public:
    explicit ArtifactTracker(std::string dir) : dir_(std::move(dir)) {}

    std::string path(const std::string& name) {
        fs::create_directories(dir_);
        const std::string full = (fs::path(dir_) / name).string();
        written_.push_back(full);
        return full;
    }

    void write_text(const std::string& name, const std::string& text) {
        const std::string full = path(name);
        std::ofstream out(full);
        if (!out) throw IoError("cannot open " + full + " for writing");
        out << text;
        if (!out.good()) throw IoError("write failure on " + full);
    }

    // Partial artifacts are removed when a command fails.
    void remove_all() {
        for (const std::string& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::string dir_;
    std::vector<std::string> written_;
};

RunConfig load_config_with_overrides(const CliOptions& opts) {
    if (opts.config_path.empty()) throw ValidationError("a --config file is required for this command");
    RunConfig cfg = load_run_config(opts.config_path);
    if (opts.seed) cfg.train.seed = *opts.seed;
    if (!opts.out_dir_override.empty()) cfg.output_dir = opts.out_dir_override;
    if (!opts.variant_override.empty()) cfg.train.variant = variant_from_string(opts.variant_override);
    return cfg;
}

const WorldSpec& require_world(const RunConfig& cfg) {
    if (!cfg.has_world) throw ValidationError("config: this command requires a \"world\" section");
    return cfg.world;
}

std::vector<Episode> episodes_for(const RunConfig& cfg, const World& world) {
    if (!cfg.dataset.path.empty()) {
        Dataset ds = import_dataset(cfg.dataset.path);
        if (!(ds.spec == world.spec)) {
            throw ValidationError("dataset at " + cfg.dataset.path +
                                  " was generated from a different world spec");
        }
        return std::move(ds.episodes);
    }
    return sample_episodes(world, cfg.dataset.num_episodes, cfg.train.seed ^ 0x5b8dcafe1234beefULL);
}

std::string loss_curve_csv(const std::vector<double>& curve) {
    std::string text = "epoch,loss\n";
    for (std::size_t e = 0; e < curve.size(); ++e) {
        text += std::to_string(e) + "," + jsonio::fmt_double(curve[e]) + "\n";
    }
    return text;
}

int cmd_generate(const RunConfig& cfg, ArtifactTracker& artifacts, std::ostream& out) {
    World world = build_world(require_world(cfg));
    auto episodes = sample_episodes(world, cfg.dataset.num_episodes,
                                    cfg.train.seed ^ 0x5b8dcafe1234beefULL);
    const std::string path = artifacts.path("dataset.json");
    export_dataset(episodes, world.spec, path);
    out << "wrote " << episodes.size() << " episodes to " << path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, ArtifactTracker& artifacts, std::ostream& out) {
    World world = build_world(require_world(cfg));
    auto episodes = episodes_for(cfg, world);
    TrainResult result = train(world, episodes, cfg.train);
    const std::string ckpt = artifacts.path("checkpoint.json");
    result.model->save_checkpoint(ckpt);
    artifacts.write_text("loss_curve.csv", loss_curve_csv(result.loss_curve));
    out << "trained " << to_string(cfg.train.variant) << "/" << to_string(cfg.train.mode)
        << " for " << cfg.train.epochs << " epochs; final loss " << result.final_loss << "\n"
        << "checkpoint: " << ckpt << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, ArtifactTracker& artifacts, std::ostream& out) {
    World world = build_world(require_world(cfg));
    if (cfg.eval.checkpoint.empty()) {
        throw ValidationError("config: eval requires eval.checkpoint");
    }
    auto episodes = episodes_for(cfg, world);
    Model model(world, cfg.train.model_config(), cfg.train.seed);
    model.load_checkpoint(cfg.eval.checkpoint);
    MetricsReport report = evaluate(model, episodes, world.spec);
    artifacts.write_text("metrics.csv", metrics_csv(report, to_string(cfg.train.variant), cfg.train.seed));
    artifacts.write_text("cooccurrence.csv", matrix_csv(report.cooccurrence, "atomic", "atomic"));
    if (report.mode == LabelMode::single_label) {
        artifacts.write_text("matching.csv", matrix_csv(report.matching, "atomic", "class"));
    } else {
        artifacts.write_text("coclassification.csv",
                             matrix_csv(report.coclassification, "atomic", "atomic"));
    }
    out << "acc1 " << report.acc_at_1 << "  acc5 " << report.acc_at_5 << "  map " << report.map
        << "\n";
    return 0;
}

int cmd_ablate(const RunConfig& cfg, ArtifactTracker& artifacts, std::ostream& out) {
    World world = build_world(require_world(cfg));
    AblationResult result = run_ablation(world, cfg.train, cfg.ablation.train_episodes,
                                         cfg.ablation.eval_episodes);
    const std::string table = ablation_table_csv(result.rows);
    artifacts.write_text("ablation.csv", table);
    for (const auto& [variant, outcome] : result.outcomes) {
        artifacts.write_text("matching_" + variant + ".csv",
                             matrix_csv(outcome.single_report.matching, "atomic", "class"));
        artifacts.write_text("coclassification_" + variant + ".csv",
                             matrix_csv(outcome.multi_report.coclassification, "atomic", "atomic"));
    }
    out << table;
    return 0;
}

int cmd_sweep(const RunConfig& cfg, ArtifactTracker& artifacts, std::ostream& out) {
    const WorldSpec& spec = require_world(cfg);
    auto rows = run_sweep(spec, cfg.train, cfg.sweep.parameter, cfg.sweep.values,
                          cfg.ablation.train_episodes, cfg.ablation.eval_episodes);
    const std::string table = sweep_table_csv(rows);
    artifacts.write_text("sweep.csv", table);
    out << table;
    return 0;
}

struct IdentityCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;
};

double max_abs_gap(const scm::Distribution& a, const scm::Distribution& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i) m = std::max(m, std::abs(a.p[i] - b.p[i]));
    return m;
}

int cmd_scm_verify(const CliOptions& opts, std::ostream& out) {
    using namespace dcl::scm;
    std::vector<IdentityCheck> checks;
    const double tol = 1e-12;

    // Bundled confounded fixture: observational vs interventional tables.
    {
        DiscreteScm s = load_scm_file(opts.fixtures_dir + "/scm_confounded.json");
        out << "fixture scm_confounded.json  (P(Y=1|T=t) vs P(Y=1|do(T=t)))\n";
        out << "  t   observational   interventional\n";
        double gap = 0.0;
        for (std::size_t t = 0; t < s.card[T]; ++t) {
            Evidence e = no_evidence();
            e[T] = static_cast<int>(t);
            const double obs = condition(s, Y, e).p[1];
            const double intervened = do_t_backdoor_marginal(s, t).p[1];
            gap = std::max(gap, std::abs(obs - intervened));
            out << "  " << t << "   " << std::setw(12) << obs << "   " << std::setw(12) << intervened
                << "\n";
        }
        checks.push_back({"confounding gap >= 0.2 on bundled fixture", gap >= 0.2, gap});

        IdentityCheck surgery{"backdoor formula == surgery truth on bundled fixture", true, 0.0};
        for (std::size_t t = 0; t < s.card[T]; ++t) {
            const double d = max_abs_gap(do_t_backdoor_marginal(s, t),
                                         surgery_truth(s, T, t, Y, no_evidence()));
            surgery.worst = std::max(surgery.worst, d);
            surgery.pass = surgery.pass && d < tol;
        }
        checks.push_back(surgery);
    }
    {
        DiscreteScm s = load_scm_file(opts.fixtures_dir + "/scm_backdoor.json");
        IdentityCheck eq1{"observational decomposition == joint conditioning (backdoor fixture)", true, 0.0};
        IdentityCheck bd{"conditional backdoor formula == surgery truth (backdoor fixture)", true, 0.0};
        for (std::size_t v = 0; v < s.card[V]; ++v) {
            for (std::size_t t = 0; t < s.card[T]; ++t) {
                Evidence e = no_evidence();
                e[V] = static_cast<int>(v);
                e[T] = static_cast<int>(t);
                const double d1 = max_abs_gap(observational(s, v, t), condition(s, Y, e));
                eq1.worst = std::max(eq1.worst, d1);
                eq1.pass = eq1.pass && d1 < tol;
                Evidence ve = no_evidence();
                ve[V] = static_cast<int>(v);
                const double d2 = max_abs_gap(do_t_backdoor(s, v, t), surgery_truth(s, T, t, Y, ve));
                bd.worst = std::max(bd.worst, d2);
                bd.pass = bd.pass && d2 < tol;
            }
        }
        checks.push_back(eq1);
        checks.push_back(bd);
    }
    {
        DiscreteScm s = load_scm_file(opts.fixtures_dir + "/scm_frontdoor.json");
        IdentityCheck fd{"frontdoor formula == surgery truth (frontdoor fixture)", true, 0.0};
        for (std::size_t v = 0; v < s.card[V]; ++v) {
            const double d = max_abs_gap(do_v_frontdoor(s, v), surgery_truth(s, V, v, Y, no_evidence()));
            fd.worst = std::max(fd.worst, d);
            fd.pass = fd.pass && d < tol;
        }
        checks.push_back(fd);
    }

    // Random battery, half backdoor half frontdoor.
    {
        Rng rng(20240808);
        IdentityCheck bd{"backdoor battery (" + std::to_string(opts.random_models / 2) + " random models)", true, 0.0};
        IdentityCheck fd{"frontdoor battery (" + std::to_string(opts.random_models - opts.random_models / 2) + " random models)", true, 0.0};
        for (std::size_t i = 0; i < opts.random_models / 2; ++i) {
            DiscreteScm s = make_random_scm(ScmFamily::backdoor, rng);
            const std::size_t v = rng.uniform_index(s.card[V]);
            const std::size_t t = rng.uniform_index(s.card[T]);
            Evidence ve = no_evidence();
            ve[V] = static_cast<int>(v);
            const double d = max_abs_gap(do_t_backdoor(s, v, t), surgery_truth(s, T, t, Y, ve));
            bd.worst = std::max(bd.worst, d);
            bd.pass = bd.pass && d < tol;
        }
        for (std::size_t i = 0; i < opts.random_models - opts.random_models / 2; ++i) {
            DiscreteScm s = make_random_scm(ScmFamily::frontdoor, rng);
            const std::size_t v = rng.uniform_index(s.card[V]);
            const double d = max_abs_gap(do_v_frontdoor(s, v), surgery_truth(s, V, v, Y, no_evidence()));
            fd.worst = std::max(fd.worst, d);
            fd.pass = fd.pass && d < tol;
        }
        checks.push_back(bd);
        checks.push_back(fd);
    }

    bool all_pass = true;
    for (const IdentityCheck& c : checks) {
        out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  (worst " << c.worst << ")\n";
        all_pass = all_pass && c.pass;
    }
    return all_pass ? 0 : 1;
}

} // namespace

int dispatch(const CliOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        if (opts.command == "scm-verify") return cmd_scm_verify(opts, out);

        RunConfig cfg = load_config_with_overrides(opts);
        ArtifactTracker artifacts(cfg.output_dir);
        try {
            if (opts.command == "generate") return cmd_generate(cfg, artifacts, out);
            if (opts.command == "train") return cmd_train(cfg, artifacts, out);
            if (opts.command == "eval") return cmd_eval(cfg, artifacts, out);
            if (opts.command == "ablate") return cmd_ablate(cfg, artifacts, out);
            if (opts.command == "sweep") return cmd_sweep(cfg, artifacts, out);
            throw ValidationError("unknown command \"" + opts.command + "\"");
        } catch (...) {
            artifacts.remove_all();
            throw;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace dcl
