#include "topkfs/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "topkfs/autodiff.hpp"
#include "topkfs/model.hpp"
#include "topkfs/rng.hpp"
#include "topkfs/selection.hpp"

namespace topkfs {

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(values));
}

// Values bounded away from zero, so finite differences never straddle the
// relu/abs kink.
Tensor random_kink_safe(std::vector<int> shape, Rng& rng) {
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) {
        const double magnitude = rng.uniform(0.2, 1.8);
        v = rng.uniform01() < 0.5 ? -magnitude : magnitude;
    }
    return Tensor::from(std::move(shape), std::move(values));
}

// Weighted sum turns any tensor-valued op into a scalar with a
// non-degenerate gradient.
Tensor weighted_sum(Tape& tape, const Tensor& t, const Tensor& w) {
    return reduce_sum(tape, mul(tape, t, w));
}

struct PipelineToy {
    Tensor x;  // [n x d]
    ModelParams params;
    std::vector<TaskSpec> tasks;
    std::vector<std::vector<double>> labels;
    double tau = 1.0;
    int k = 3;

    std::vector<std::span<const double>> label_spans() const {
        return {labels.begin(), labels.end()};
    }
};

PipelineToy make_toy() {
    PipelineToy toy;
    Rng rng(2024);
    toy.x = random_tensor({4, 6}, rng);
    toy.tasks = {TaskSpec{"cls", TaskKind::classification, 3, 1},
                 TaskSpec{"reg", TaskKind::regression, 0, 1}};
    ModelConfig config;
    config.d = 6;
    config.k_final = 3;
    config.encoder_layers = {5};
    config.latent_dim = 3;
    config.tasks = toy.tasks;
    Rng init_rng(7);
    toy.params = init_params(config, init_rng);
    toy.labels = {{0.0, 2.0, -1.0, 1.0},
                  {0.5, std::numeric_limits<double>::quiet_NaN(), -1.2, 2.0}};
    return toy;
}

// Relaxed-mask pipeline loss: the fully differentiable path that the
// finite-difference oracle can probe. The straight-through hard path is
// piecewise constant in s and is validated separately via the gradient
// identity with this one.
Tensor relaxed_pipeline_loss(Tape& tape, const Tensor& scores, const PipelineToy& toy,
                             const ModelParams& params) {
    RelaxedPermutation perm = relaxed_permutation(tape, scores, toy.tau);
    Tensor gamma = topk_relaxed_mask(tape, perm, toy.k);
    ForwardResult fwd;
    fwd.masked = mul(tape, toy.x, gamma);
    fwd.latent = encode(tape, fwd.masked, params);
    for (std::size_t t = 0; t < toy.tasks.size(); ++t)
        fwd.preds.push_back(predict(tape, fwd.latent, static_cast<int>(t), params));
    return joint_loss(tape, fwd, toy.label_spans(), toy.tasks);
}

}  // namespace

std::vector<GradCheckResult> gradcheck_suite() {
    std::vector<GradCheckResult> results;
    auto run = [&results](const std::string& name, double tolerance,
                          const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                          double eps = 1e-5) {
        GradCheckResult r;
        r.name = name;
        r.tolerance = tolerance;
        r.max_rel_error = grad_check(f, x, eps);
        r.passed = r.max_rel_error < tolerance;
        results.push_back(std::move(r));
    };

    Rng rng(42);

    {
        const Tensor b = random_tensor({4, 2}, rng);
        const Tensor w = random_tensor({3, 2}, rng);
        run("matmul_lhs", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, matmul(t, x, b), w); },
            random_tensor({3, 4}, rng));
        const Tensor a = random_tensor({3, 4}, rng);
        run("matmul_rhs", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, matmul(t, a, x), w); },
            random_tensor({4, 2}, rng));
    }
    {
        const Tensor w = random_tensor({4, 4}, rng);
        run("softmax_rows", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, softmax_rows(t, x), w); },
            random_tensor({4, 4}, rng));
        const Tensor m = random_tensor({4, 4}, rng);
        run("softmax_matmul_composed", 1e-5,
            [&](Tape& t, const Tensor& x) {
                return weighted_sum(t, softmax_rows(t, matmul(t, x, m)), w);
            },
            random_tensor({4, 4}, rng));
    }
    {
        const Tensor v = random_tensor({3}, rng);
        const Tensor w = random_tensor({2, 3}, rng);
        run("mul_broadcast_matrix", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, mul(t, x, v), w); },
            random_tensor({2, 3}, rng));
        const Tensor x_fixed = random_tensor({2, 3}, rng);
        run("mul_broadcast_vector", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, mul(t, x_fixed, x), w); },
            random_tensor({3}, rng));
    }
    {
        const Tensor w = random_tensor({3, 3}, rng);
        run("relu", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, relu(t, x), w); },
            random_kink_safe({3, 3}, rng));
        run("abs", 1e-4,
            [&](Tape& t, const Tensor& x) { return weighted_sum(t, abs_val(t, x), w); },
            random_kink_safe({3, 3}, rng));
        const Tensor c = random_tensor({3, 3}, rng);
        run("add_sub_neg_scale", 1e-4,
            [&](Tape& t, const Tensor& x) {
                return weighted_sum(t, scale(t, add(t, x, neg(t, sub(t, c, x))), 1.7), w);
            },
            random_tensor({3, 3}, rng));
    }
    {
        const Tensor w = random_tensor({4}, rng);
        run("reduce_mean_axis0", 1e-4,
            [&](Tape& t, const Tensor& x) {
                return reduce_sum(t, mul(t, reduce_mean(t, x, 0), w));
            },
            random_tensor({3, 4}, rng));
        const Tensor w6 = random_tensor({6}, rng);
        run("reshape", 1e-4,
            [&](Tape& t, const Tensor& x) {
                return reduce_sum(t, mul(t, reshape(t, x, {6}), w6));
            },
            random_tensor({2, 3}, rng));
    }
    run("sum_of_squares", 1e-8,
        [](Tape& t, const Tensor& x) { return reduce_sum(t, mul(t, x, x)); },
        random_tensor({3, 3}, rng));
    {
        const Tensor w = random_tensor({5, 5}, rng);
        run("pairwise_abs_diff", 1e-4,
            [&](Tape& t, const Tensor& s) { return weighted_sum(t, pairwise_abs_diff(t, s), w); },
            random_tensor({5}, rng));
        run("relaxed_permutation", 1e-4,
            [&](Tape& t, const Tensor& s) {
                return weighted_sum(t, relaxed_permutation(t, s, 1.0).pi, w);
            },
            random_tensor({5}, rng));
        const Tensor w5 = random_tensor({5}, rng);
        run("topk_relaxed_mask", 1e-4,
            [&](Tape& t, const Tensor& s) {
                return weighted_sum(t, topk_relaxed_mask(t, relaxed_permutation(t, s, 0.7), 2), w5);
            },
            random_tensor({5}, rng));
    }
    {
        const TaskSpec cls{"cls", TaskKind::classification, 3, 1};
        const std::vector<double> labels{0.0, 2.0, -1.0, 1.0, 2.0};
        run("cross_entropy_loss", 1e-4,
            [&](Tape& t, const Tensor& logits) { return task_loss(t, logits, labels, cls); },
            random_tensor({5, 3}, rng));
        const TaskSpec reg{"reg", TaskKind::regression, 0, 1};
        const std::vector<double> targets{0.5, std::numeric_limits<double>::quiet_NaN(), -1.2, 2.0};
        run("mse_loss", 1e-4,
            [&](Tape& t, const Tensor& pred) { return task_loss(t, pred, targets, reg); },
            random_tensor({4, 1}, rng));
    }
    {
        const PipelineToy toy = make_toy();
        run("pipeline_scores", 1e-4,
            [&](Tape& t, const Tensor& s) {
                return relaxed_pipeline_loss(t, s, toy, toy.params);
            },
            random_tensor({6}, rng, -1.0, 1.0));
        const Tensor fixed_scores = random_tensor({6}, rng, -1.0, 1.0);
        run("pipeline_encoder_weights", 1e-4,
            [&](Tape& t, const Tensor& w1) {
                ModelParams swapped = toy.params;
                swapped.encoder_weights[0] = w1;
                return relaxed_pipeline_loss(t, fixed_scores, toy, swapped);
            },
            toy.params.encoder_weights[0].detach());
    }
    return results;
}

}  // namespace topkfs
