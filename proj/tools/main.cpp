#include <iostream>

#include <CLI11.hpp>

#include "dualcausal/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dualcausal: synthetic long-term action recognition with causal interventions"};
    app.require_subcommand(1);

    dcl::CliOptions opts;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "path to the run configuration file")->required();
        cmd->add_option("--seed", seed_value, "override the training seed");
        cmd->add_option("--out", opts.out_dir_override, "override the output directory");
        cmd->add_option("--variant", opts.variant_override,
                        "override the model variant (baseline|tci_only|vci_only|full)");
    };

    add_common(app.add_subcommand("generate", "sample a dataset from the configured world"));
    add_common(app.add_subcommand("train", "train one model and write checkpoint + loss curve"));
    add_common(app.add_subcommand("eval", "evaluate a checkpoint and write metric tables"));
    add_common(app.add_subcommand("ablate", "train and compare all four variants"));
    add_common(app.add_subcommand("sweep", "sweep encoder depth or frame count"));

    CLI::App* verify = app.add_subcommand("scm-verify", "run the causal-identity oracle suite");
    verify->add_option("--fixtures", opts.fixtures_dir, "directory holding the bundled fixtures");
    verify->add_option("--random-models", opts.random_models, "size of the random model battery");

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    opts.command = sub->get_name();
    const CLI::Option* seed_opt = sub->get_option_no_throw("--seed");
    if (seed_opt != nullptr && seed_opt->count() > 0) opts.seed = seed_value;
    return dcl::dispatch(opts, std::cout, std::cerr);
}
