#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace topkfs::cli {

namespace {

void add_seed_options(CLI::App* cmd, std::vector<int>& seeds) {
    auto* single = cmd->add_option_function<int>(
        "--seed", [&seeds](const int& s) { seeds = {s}; }, "run seed");
    cmd->add_option("--seeds", seeds, "comma-separated seeds, e.g. 0,1,2")
        ->delimiter(',')
        ->excludes(single);
}

}  // namespace

int run_main(int argc, const char* const* argv) {
    CLI::App app{"differentiable top-k feature selection with multi-task prediction"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset CSV + sidecar");
    synth_cmd->add_option("--out", synth.out, "output CSV path")->required();
    synth_cmd->add_option("--n", synth.n, "samples");
    synth_cmd->add_option("--d", synth.d, "features");
    synth_cmd->add_option("--g", synth.g, "informative features per task");
    synth_cmd->add_option("--tasks", synth.tasks, "task specs, e.g. c4 c2:0.5 r")->delimiter(',');
    synth_cmd->add_option("--shared-fraction", synth.shared_fraction,
                          "informative-set overlap across tasks");
    synth_cmd->add_option("--noise-sigma", synth.noise_sigma, "label noise scale");
    synth_cmd->add_option("--nonlinearity", synth.nonlinearity, "linear | xor");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "train selection + multi-task model");
    train_cmd->add_option("--config", train.config_path, "config JSON");
    train_cmd->add_option("--data", train.data_path, "dataset CSV")->required();
    train_cmd->add_option("--truth", train.truth_path, "ground-truth sidecar JSON");
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();
    train_cmd->add_option("--k", train.k_override, "override k_final");
    train_cmd->add_option("--epochs", train.epochs_override, "override epochs");
    train_cmd->add_option("--task", train.task_override, "train on a single named task");
    add_seed_options(train_cmd, train.seeds);

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "checkpoint JSON")->required();
    eval_cmd->add_option("--config", eval.config_path, "config JSON (preprocessing options)");
    eval_cmd->add_option("--data", eval.data_path, "dataset CSV")->required();
    eval_cmd->add_option("--out", eval.out_path, "metrics JSON path")->required();
    eval_cmd->add_option("--seed", eval.seed_override, "split seed (default: checkpoint's)");

    AblateOptions ablate;
    auto* ablate_cmd =
        app.add_subcommand("ablate", "single-task runs per task vs the joint multi-task run");
    ablate_cmd->add_option("--config", ablate.config_path, "config JSON");
    ablate_cmd->add_option("--data", ablate.data_path, "dataset CSV")->required();
    ablate_cmd->add_option("--out", ablate.out_dir, "output directory")->required();
    ablate_cmd->add_option("--k", ablate.k_override, "override k_final");
    ablate_cmd->add_option("--epochs", ablate.epochs_override, "override epochs");
    add_seed_options(ablate_cmd, ablate.seeds);

    BaselineOptions baseline;
    auto* baseline_cmd =
        app.add_subcommand("baseline", "mRMR-f selection + fixed-mask retraining");
    baseline_cmd->add_option("--config", baseline.config_path, "config JSON");
    baseline_cmd->add_option("--data", baseline.data_path, "dataset CSV")->required();
    baseline_cmd->add_option("--truth", baseline.truth_path, "ground-truth sidecar JSON");
    baseline_cmd->add_option("--out", baseline.out_dir, "output directory")->required();
    baseline_cmd->add_option("--k", baseline.k, "subset size (default: config k_final)");
    baseline_cmd->add_option("--task", baseline.task, "label column for relevance scoring");
    baseline_cmd->add_option("--epochs", baseline.epochs_override, "override epochs");
    add_seed_options(baseline_cmd, baseline.seeds);

    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of every differentiable op");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (train_cmd->parsed()) return cmd_train(train);
        if (eval_cmd->parsed()) return cmd_eval(eval);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate);
        if (baseline_cmd->parsed()) return cmd_baseline(baseline);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace topkfs::cli
