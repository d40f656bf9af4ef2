#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "topkfs/data.hpp"
#include "topkfs/metrics.hpp"
#include "topkfs/model.hpp"

namespace topkfs {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int seed = 0;
    int eval_every = 20;  // epochs between held-out evaluations
};

struct AdamState {
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// Standard Adam update with bias correction, reading each parameter's
/// accumulated gradient. Missing gradients count as zero.
void adam_step(std::vector<Tensor>& params, AdamState& state, const TrainConfig& config);

struct EvalPoint {
    int epoch = 0;
    long step = 0;
    std::vector<MetricRecord> per_task;
};

struct TrainReport {
    std::vector<EvalPoint> evals;
    std::vector<MetricRecord> final_metrics;
    std::vector<int> selected_features;  // ascending index order
    std::vector<std::string> selected_feature_names_by_score;  // descending final score
    std::vector<double> final_scores;
    std::vector<double> loss_trace;  // per optimizer step
    std::vector<double> tau_trace;
    std::vector<int> k_trace;
    TemperatureSchedule tau_schedule;
    SparsitySchedule k_schedule;
    long total_steps = 0;
    double selection_precision = std::numeric_limits<double>::quiet_NaN();
    double selection_recall = std::numeric_limits<double>::quiet_NaN();
};

/// Joint training of selection scores, encoder, and heads. Deterministic:
/// (seeds, config, dataset) fix the full parameter trajectory. The split
/// comes from the dataset when present, otherwise an 80/20 split seeded by
/// train_config.seed is applied first. Aborts with a diagnostic naming the
/// step, tau, and k if the loss turns NaN.
std::pair<ModelParams, TrainReport> train(const Dataset& dataset, const ModelConfig& model_config,
                                          const TrainConfig& train_config);

/// Same architecture and loop with a frozen hard mask at `indices`; no
/// score learning and no annealing.
std::pair<ModelParams, TrainReport> train_fixed_mask(const Dataset& dataset,
                                                     const std::vector<int>& indices,
                                                     const ModelConfig& model_config,
                                                     const TrainConfig& train_config);

/// Deterministic evaluation: no noise, hard top-k mask from the scores.
std::vector<MetricRecord> evaluate(const ModelParams& params, const Dataset& dataset, Split split,
                                   const std::vector<TaskSpec>& tasks, int k);

std::vector<MetricRecord> evaluate_with_mask(const ModelParams& params, const Dataset& dataset,
                                             Split split, const std::vector<TaskSpec>& tasks,
                                             const std::vector<double>& hard_mask);

/// Restricts the config to a single task; everything else unchanged.
ModelConfig single_task_mode(const ModelConfig& config, int task_index);

/// Binds config tasks to dataset label columns by name and fills in
/// num_classes where the config leaves it 0.
ModelConfig resolve_tasks(const ModelConfig& config, const Dataset& dataset);

nlohmann::ordered_json metric_record_to_json(const MetricRecord& record);
nlohmann::ordered_json report_to_json(const TrainReport& report);

}  // namespace topkfs
