#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topkfs/data.hpp"
#include "topkfs/model.hpp"
#include "topkfs/trainer.hpp"

namespace topkfs::cli {

/// Config file contents with every key defaulted; CLI flags override
/// individual fields after parsing. The effective config is echoed into
/// every output file.
struct AppConfig {
    struct DataSection {
        std::vector<LabelColumnSpec> label_columns;
        bool binarize = false;
        double binarize_threshold = 0.0;
        int hvg_top = 0;  // 0 = keep all features
    } data;
    ModelConfig model;  // model.d is filled from the dataset
    TrainConfig train;
};

AppConfig load_config(const std::string& path);  // empty path = all defaults
nlohmann::ordered_json config_to_json(const AppConfig& config);

/// Loads the CSV named by the options, applies hvg/binarize preprocessing,
/// and attaches the ground-truth sidecar when given.
Dataset load_dataset(const AppConfig& config, const std::string& data_path,
                     const std::string& truth_path);

struct SynthOptions {
    std::string out;  // dataset CSV; the sidecar lands next to it
    int n = 1000;
    int d = 50;
    int g = 5;
    std::vector<std::string> tasks{"c2"};  // "c<classes>[:missing]" or "r[:missing]"
    double shared_fraction = 1.0;
    double noise_sigma = 0.5;
    std::string nonlinearity = "linear";  // or "xor"
    std::uint64_t seed = 0;
    bool quiet = false;
};
int cmd_synth(const SynthOptions& options);

struct TrainOptions {
    std::string config_path;
    std::string data_path;
    std::string truth_path;  // optional ground-truth sidecar
    std::string out_dir;
    std::vector<int> seeds{0};
    int k_override = -1;
    int epochs_override = -1;
    std::string task_override;  // restrict training to one task by name
    bool quiet = false;
};
int cmd_train(const TrainOptions& options);

struct EvalOptions {
    std::string checkpoint_path;
    std::string config_path;  // optional, for preprocessing options
    std::string data_path;
    std::string out_path;
    int seed_override = -1;  // split seed; default: the checkpoint's seed
};
int cmd_eval(const EvalOptions& options);

struct AblateOptions {
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::vector<int> seeds{0};
    int k_override = -1;
    int epochs_override = -1;
    bool quiet = false;
};
int cmd_ablate(const AblateOptions& options);

struct BaselineOptions {
    std::string config_path;
    std::string data_path;
    std::string truth_path;
    std::string out_dir;
    int k = -1;  // -1: use the config's k_final
    std::vector<int> seeds{0};
    std::string task;  // default: first classification task
    int epochs_override = -1;
    bool quiet = false;
};
int cmd_baseline(const BaselineOptions& options);

int cmd_gradcheck();

int run_main(int argc, const char* const* argv);

}  // namespace topkfs::cli
