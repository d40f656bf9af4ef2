#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topkfs/autodiff.hpp"
#include "topkfs/data.hpp"
#include "topkfs/rng.hpp"
#include "topkfs/selection.hpp"
#include "topkfs/tensor.hpp"

namespace topkfs {

struct TaskSpec {
    std::string name;
    TaskKind kind = TaskKind::classification;
    int num_classes = 0;  // classification: >= 2
    int output_dim = 1;   // regression: >= 1
};

/// Model shape plus annealing knobs. Schedule fields with negative values
/// are resolved against the training length when train() starts: tau_rate
/// so tau reaches tau_min at 80% of the steps, warmup/decay from the
/// fraction fields.
struct ModelConfig {
    int d = 0;
    int k_final = 0;
    std::vector<int> encoder_layers{128, 128};  // hidden widths; may be empty
    int latent_dim = 64;
    std::vector<TaskSpec> tasks;

    double tau0 = 4.0;
    double tau_min = 0.05;
    double tau_rate = -1.0;
    long warmup_steps = -1;
    long decay_steps = -1;
    double warmup_frac = 0.1;
    double decay_frac = 0.4;
    double noise_scale0 = 0.5;

    int seed = 0;
};

void validate(const ModelConfig& config);

struct ModelParams {
    Tensor scores;  // [d]
    std::vector<Tensor> encoder_weights;
    std::vector<Tensor> encoder_biases;
    std::vector<Tensor> head_weights;
    std::vector<Tensor> head_biases;

    /// Fixed-order flat view: scores, encoder weights/biases, head
    /// weights/biases. Optimizer state is keyed to this order.
    std::vector<Tensor> all() const;
};

/// Scores ~ U[-0.01, 0.01]; weights ~ U[-sqrt(6/fan_in), sqrt(6/fan_in)];
/// biases zero. Deterministic per rng stream.
ModelParams init_params(const ModelConfig& config, Rng& rng);

/// S_k = X (*) mask: hard values forward, relaxed gradient backward.
Tensor apply_mask(Tape& tape, const Tensor& x, const SelectionMask& mask);

/// MLP with relu between hidden layers and a linear map to latent_dim.
Tensor encode(Tape& tape, const Tensor& masked, const ModelParams& params);

/// Linear head for task `task_index`; classification emits logits.
Tensor predict(Tape& tape, const Tensor& latent, int task_index, const ModelParams& params);

/// Classification: mean over labeled rows of stabilized softmax
/// cross-entropy (label -1 = missing). Regression: mean squared error over
/// labeled rows (NaN = missing). A batch with no labels contributes a
/// constant 0.
Tensor task_loss(Tape& tape, const Tensor& pred, std::span<const double> labels,
                 const TaskSpec& task);

struct ForwardResult {
    Tensor masked;
    Tensor latent;
    std::vector<Tensor> preds;  // one per task
};

ForwardResult forward_pass(Tape& tape, const Tensor& x, const ModelParams& params,
                           const Tensor& mask, const std::vector<TaskSpec>& tasks);

/// L = (1/T) sum_t L_t; tasks without labels in the batch contribute 0 but
/// still count toward T.
Tensor joint_loss(Tape& tape, const ForwardResult& fwd,
                  const std::vector<std::span<const double>>& labels,
                  const std::vector<TaskSpec>& tasks);

// Checkpoints: versioned JSON; parameter payloads are hex-encoded IEEE-754
// bit patterns so round-trips are exact.
void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params);
std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path);

}  // namespace topkfs
