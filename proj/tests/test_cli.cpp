#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "doctest.h"
#include "topkfs/data.hpp"
#include "topkfs/model.hpp"

using namespace topkfs;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& child) const { return (path / child).string(); }
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

void write_config(const std::string& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2);
}

json small_config() {
    return json{
        {"data", {{"label_columns", json::array({{{"name", "task0"}, {"kind", "classification"}}})}}},
        {"model", {{"k_final", 2}, {"encoder_layers", json::array({8})}, {"latent_dim", 4}}},
        {"train", {{"epochs", 8}, {"batch_size", 20}, {"eval_every", 4}, {"seed", 0}}}};
}

std::string make_dataset(const TempDir& dir) {
    cli::SynthOptions synth;
    synth.out = dir / "data.csv";
    synth.n = 120;
    synth.d = 8;
    synth.g = 2;
    synth.tasks = {"c3"};
    synth.noise_sigma = 0.2;
    synth.seed = 5;
    REQUIRE(cli::cmd_synth(synth) == 0);
    return synth.out;
}

}  // namespace

TEST_CASE("cmd_synth writes a loadable dataset and ground-truth sidecar") {
    TempDir dir("topkfs_cli_synth");
    const std::string csv = make_dataset(dir);

    Dataset ds = load_csv(csv, {{"task0", TaskKind::classification, 0}});
    CHECK(ds.n == 120);
    CHECK(ds.d == 8);
    CHECK(ds.labels[0].num_classes == 3);

    const json sidecar = read_json(csv + ".truth.json");
    CHECK(sidecar.at("schema_version") == 1);
    CHECK(sidecar.at("indices").size() == 2);
}

TEST_CASE("cmd_train writes report, checkpoint, and the selected-features file") {
    TempDir dir("topkfs_cli_train");
    const std::string csv = make_dataset(dir);
    write_config(dir / "config.json", small_config());

    cli::TrainOptions train;
    train.config_path = dir / "config.json";
    train.data_path = csv;
    train.truth_path = csv + ".truth.json";
    train.out_dir = dir / "run";
    train.seeds = {0};
    REQUIRE(cli::cmd_train(train) == 0);

    const json report = read_json(dir / "run/seed_0/report.json");
    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("kind") == "topkfs-train-report");
    CHECK(report.contains("timestamp"));
    CHECK(report.at("effective_config").at("model").at("k_final") == 2);
    CHECK(report.at("report").at("selected_features").size() == 2);
    CHECK(report.at("report").at("k_trace").back() == 2);

    auto [config, params] = load_checkpoint(dir / "run/seed_0/checkpoint.json");
    CHECK(config.d == 8);
    CHECK(params.scores.numel() == 8);

    std::ifstream names(dir / "run/seed_0/selected_features.txt");
    std::string line;
    int count = 0;
    while (std::getline(names, line))
        if (!line.empty()) ++count;
    CHECK(count == 2);

    const json summary = read_json(dir / "run/summary.json");
    CHECK(summary.at("kind") == "topkfs-train-summary");
}

TEST_CASE("cmd_train is byte-identical across reruns, timestamps aside") {
    TempDir dir("topkfs_cli_determinism");
    const std::string csv = make_dataset(dir);
    write_config(dir / "config.json", small_config());

    auto run = [&](const std::string& out) {
        cli::TrainOptions train;
        train.config_path = dir / "config.json";
        train.data_path = csv;
        train.out_dir = out;
        train.seeds = {3};
        REQUIRE(cli::cmd_train(train) == 0);
        json report = read_json(out + "/seed_3/report.json");
        report.erase("timestamp");
        return report.dump();
    };
    CHECK(run(dir / "a") == run(dir / "b"));
}

TEST_CASE("cmd_eval reproduces the final training metrics") {
    TempDir dir("topkfs_cli_eval");
    const std::string csv = make_dataset(dir);
    write_config(dir / "config.json", small_config());

    cli::TrainOptions train;
    train.config_path = dir / "config.json";
    train.data_path = csv;
    train.out_dir = dir / "run";
    train.seeds = {1};
    REQUIRE(cli::cmd_train(train) == 0);

    cli::EvalOptions eval;
    eval.checkpoint_path = dir / "run/seed_1/checkpoint.json";
    eval.data_path = csv;
    eval.out_path = dir / "metrics.json";
    REQUIRE(cli::cmd_eval(eval) == 0);

    const json train_report = read_json(dir / "run/seed_1/report.json");
    const json eval_out = read_json(dir / "metrics.json");
    CHECK(eval_out.at("kind") == "topkfs-eval");
    CHECK(eval_out.at("metrics") == train_report.at("report").at("final_metrics"));
}

TEST_CASE("cmd_ablate with one task matches cmd_train bit for bit") {
    TempDir dir("topkfs_cli_ablate");
    const std::string csv = make_dataset(dir);
    write_config(dir / "config.json", small_config());

    cli::TrainOptions train;
    train.config_path = dir / "config.json";
    train.data_path = csv;
    train.out_dir = dir / "train_run";
    train.seeds = {2};
    REQUIRE(cli::cmd_train(train) == 0);

    cli::AblateOptions ablate;
    ablate.config_path = dir / "config.json";
    ablate.data_path = csv;
    ablate.out_dir = dir / "ablate_run";
    ablate.seeds = {2};
    REQUIRE(cli::cmd_ablate(ablate) == 0);

    json from_train = read_json(dir / "train_run/seed_2/report.json");
    json from_single = read_json(dir / "ablate_run/single_task0/seed_2/report.json");
    json from_multi = read_json(dir / "ablate_run/multitask/seed_2/report.json");
    from_train.erase("timestamp");
    from_single.erase("timestamp");
    from_multi.erase("timestamp");
    CHECK(from_train.dump() == from_single.dump());
    CHECK(from_train.dump() == from_multi.dump());

    CHECK(read_json(dir / "ablate_run/ablation.json").at("kind") == "topkfs-ablation");
}

TEST_CASE("cmd_baseline emits selection and metrics") {
    TempDir dir("topkfs_cli_baseline");
    const std::string csv = make_dataset(dir);
    write_config(dir / "config.json", small_config());

    cli::BaselineOptions baseline;
    baseline.config_path = dir / "config.json";
    baseline.data_path = csv;
    baseline.truth_path = csv + ".truth.json";
    baseline.out_dir = dir / "baseline";
    baseline.seeds = {0};
    REQUIRE(cli::cmd_baseline(baseline) == 0);

    const json out = read_json(dir / "baseline/baseline.json");
    CHECK(out.at("kind") == "topkfs-baseline");
    CHECK(out.at("method") == "mrmr-f");
    CHECK(out.at("runs").size() == 1);
    CHECK(out.at("runs")[0].at("selected_indices").size() == 2);
    CHECK(out.at("runs")[0].contains("selection_recall"));
}

TEST_CASE("run_main dispatches argv and reports errors with nonzero exit") {
    TempDir dir("topkfs_cli_argv");
    const std::string csv = dir / "argv_data.csv";
    const std::string out = dir / "argv_out";
    {
        const char* argv[] = {"topkfs", "synth", "--out", csv.c_str(),  "--n", "60",
                              "--d",    "6",     "--g",   "2",          "--tasks", "c2",
                              "--seed", "9"};
        CHECK(cli::run_main(static_cast<int>(std::size(argv)), argv) == 0);
    }
    {
        const char* argv[] = {"topkfs", "train", "--data", csv.c_str(), "--out", out.c_str(),
                              "--epochs", "3", "--k", "2", "--seed", "0"};
        CHECK(cli::run_main(static_cast<int>(std::size(argv)), argv) == 0);
    }
    {
        const char* argv[] = {"topkfs", "train", "--data", "/nonexistent.csv", "--out",
                              out.c_str()};
        CHECK(cli::run_main(static_cast<int>(std::size(argv)), argv) != 0);
    }
    {
        const char* argv[] = {"topkfs", "nonsense"};
        CHECK(cli::run_main(2, argv) != 0);
    }
}
