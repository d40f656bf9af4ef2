#include "topkfs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace topkfs {

namespace {

using json = nlohmann::ordered_json;

Tensor gather_rows(const Dataset& ds, const std::vector<int>& rows) {
    std::vector<double> values;
    values.reserve(rows.size() * static_cast<std::size_t>(ds.d));
    for (int r : rows) {
        auto row = ds.row(r);
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor::from({static_cast<int>(rows.size()), ds.d}, std::move(values));
}

std::vector<double> gather_labels(const LabelColumn& col, const std::vector<int>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(col.values[static_cast<std::size_t>(r)]);
    return out;
}

int find_label_column(const Dataset& ds, const std::string& name) {
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        if (ds.labels[i].name == name) return static_cast<int>(i);
    throw std::runtime_error("train: dataset has no label column '" + name + "'");
}

std::vector<double> indicator_mask(int d, const std::vector<int>& indices) {
    std::vector<double> mask(static_cast<std::size_t>(d), 0.0);
    for (int idx : indices) {
        if (idx < 0 || idx >= d)
            throw std::invalid_argument("mask index " + std::to_string(idx) + " outside [0, " +
                                        std::to_string(d) + ")");
        mask[static_cast<std::size_t>(idx)] = 1.0;
    }
    return mask;
}

struct ResolvedSchedules {
    TemperatureSchedule tau;
    SparsitySchedule k;
};

ResolvedSchedules resolve_schedules(const ModelConfig& config, long total_steps) {
    ResolvedSchedules s;
    s.tau.tau0 = config.tau0;
    s.tau.tau_min = config.tau_min;
    if (config.tau_rate >= 0.0) {
        s.tau.rate = config.tau_rate;
    } else if (config.tau0 > config.tau_min && total_steps > 0) {
        // reach tau_min at 80% of training
        s.tau.rate = std::log(config.tau0 / config.tau_min) / (0.8 * static_cast<double>(total_steps));
    } else {
        s.tau.rate = 0.0;
    }
    s.k.d = config.d;
    s.k.k_final = config.k_final;
    s.k.warmup_steps = config.warmup_steps >= 0
                           ? config.warmup_steps
                           : std::llround(config.warmup_frac * static_cast<double>(total_steps));
    s.k.decay_steps = config.decay_steps >= 0
                          ? config.decay_steps
                          : std::llround(config.decay_frac * static_cast<double>(total_steps));
    return s;
}

struct TrainLoopSpec {
    bool learn_selection = true;
    std::vector<double> fixed_mask;  // used when learn_selection == false
};

std::pair<ModelParams, TrainReport> run_training(const Dataset& dataset,
                                                 const ModelConfig& model_config,
                                                 const TrainConfig& train_config,
                                                 const TrainLoopSpec& loop_spec) {
    if (train_config.epochs < 1 || train_config.batch_size < 1)
        throw std::invalid_argument("train: epochs and batch_size must be >= 1");
    if (!(train_config.learning_rate > 0.0))
        throw std::invalid_argument("train: learning_rate must be positive");
    if (dataset.d != model_config.d)
        throw std::invalid_argument("train: dataset has " + std::to_string(dataset.d) +
                                    " features but model expects " + std::to_string(model_config.d));

    const ModelConfig config = resolve_tasks(model_config, dataset);
    validate(config);

    const Dataset ds = dataset.split_assignment.empty()
                           ? make_split(dataset, static_cast<std::uint64_t>(train_config.seed))
                           : dataset;
    std::vector<int> train_rows = ds.rows_in(Split::train);
    if (train_rows.empty()) throw std::runtime_error("train: empty training split");

    std::vector<int> column_of_task;
    for (const TaskSpec& t : config.tasks) column_of_task.push_back(find_label_column(ds, t.name));

    const long steps_per_epoch =
        (static_cast<long>(train_rows.size()) + train_config.batch_size - 1) /
        train_config.batch_size;
    const long total_steps = steps_per_epoch * train_config.epochs;
    const ResolvedSchedules sched = resolve_schedules(config, total_steps);

    Rng init_rng(static_cast<std::uint64_t>(config.seed));
    ModelParams params = init_params(config, init_rng);
    Rng loop_rng = Rng(static_cast<std::uint64_t>(train_config.seed)).fork();

    std::vector<Tensor> learned = params.all();
    if (!loop_spec.learn_selection) learned.erase(learned.begin());  // scores stay frozen
    AdamState adam;

    TrainReport report;
    report.tau_schedule = sched.tau;
    report.k_schedule = sched.k;
    report.total_steps = total_steps;
    report.loss_trace.reserve(static_cast<std::size_t>(total_steps));

    const Tensor fixed_mask_tensor =
        loop_spec.learn_selection
            ? Tensor()
            : Tensor::from({config.d}, loop_spec.fixed_mask);

    long step = 0;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        shuffle(train_rows, loop_rng);
        for (std::size_t start = 0; start < train_rows.size();
             start += static_cast<std::size_t>(train_config.batch_size)) {
            const std::size_t stop =
                std::min(train_rows.size(), start + static_cast<std::size_t>(train_config.batch_size));
            const std::vector<int> batch(train_rows.begin() + static_cast<long>(start),
                                         train_rows.begin() + static_cast<long>(stop));

            Tape tape;
            Tensor mask_tensor;
            double tau = 0.0;
            int k = 0;
            if (loop_spec.learn_selection) {
                tau = temperature_at(sched.tau, step);
                k = k_at(sched.k, step);
                const double noise =
                    config.noise_scale0 * std::exp(-sched.tau.rate * static_cast<double>(step));
                report.tau_trace.push_back(tau);
                report.k_trace.push_back(k);
                SelectionMask mask =
                    straight_through_mask(tape, params.scores, tau, k, &loop_rng, noise);
                mask_tensor = mask.st;
            } else {
                mask_tensor = fixed_mask_tensor;
            }

            const Tensor xb = gather_rows(ds, batch);
            std::vector<std::vector<double>> label_data;
            label_data.reserve(config.tasks.size());
            for (std::size_t t = 0; t < config.tasks.size(); ++t)
                label_data.push_back(
                    gather_labels(ds.labels[static_cast<std::size_t>(column_of_task[t])], batch));
            std::vector<std::span<const double>> labels(label_data.begin(), label_data.end());

            const ForwardResult fwd = forward_pass(tape, xb, params, mask_tensor, config.tasks);
            const Tensor loss = joint_loss(tape, fwd, labels, config.tasks);
            const double loss_value = loss.item();
            if (std::isnan(loss_value))
                throw std::runtime_error("train: NaN loss at step " + std::to_string(step) +
                                         " (tau=" + std::to_string(tau) +
                                         ", k=" + std::to_string(k) + ")");
            report.loss_trace.push_back(loss_value);

            tape.backward(loss);
            adam_step(learned, adam, train_config);
            for (Tensor& p : learned) p.zero_grad();
            ++step;
        }

        const bool last = epoch + 1 == train_config.epochs;
        if (last || (train_config.eval_every > 0 && (epoch + 1) % train_config.eval_every == 0)) {
            EvalPoint point;
            point.epoch = epoch + 1;
            point.step = step;
            point.per_task = loop_spec.learn_selection
                                 ? evaluate(params, ds, Split::test, config.tasks, config.k_final)
                                 : evaluate_with_mask(params, ds, Split::test, config.tasks,
                                                      loop_spec.fixed_mask);
            if (last) report.final_metrics = point.per_task;
            report.evals.push_back(std::move(point));
        }
    }

    auto scores = params.scores.values();
    report.final_scores.assign(scores.begin(), scores.end());
    if (loop_spec.learn_selection) {
        const std::vector<int> ranked = topk_indices(scores, config.k_final);
        report.selected_features = ranked;
        std::sort(report.selected_features.begin(), report.selected_features.end());
        for (int idx : ranked)
            report.selected_feature_names_by_score.push_back(
                ds.feature_names[static_cast<std::size_t>(idx)]);
    } else {
        for (int j = 0; j < config.d; ++j)
            if (loop_spec.fixed_mask[static_cast<std::size_t>(j)] == 1.0)
                report.selected_features.push_back(j);
        for (int idx : report.selected_features)
            report.selected_feature_names_by_score.push_back(
                ds.feature_names[static_cast<std::size_t>(idx)]);
    }
    if (!ds.ground_truth_features.empty()) {
        auto [precision, recall] =
            selection_recovery(report.selected_features, ds.ground_truth_features);
        report.selection_precision = precision;
        report.selection_recall = recall;
    }
    return {std::move(params), std::move(report)};
}

}  // namespace

void adam_step(std::vector<Tensor>& params, AdamState& state, const TrainConfig& config) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            state.m[p].assign(params[p].numel(), 0.0);
            state.v[p].assign(params[p].numel(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state does not match parameter list");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto values = params[p].mutable_values();
        auto grad = params[p].grad();
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i];
            m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g;
            v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g * g;
            values[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam_eps);
        }
    }
}

ModelConfig resolve_tasks(const ModelConfig& config, const Dataset& dataset) {
    ModelConfig out = config;
    for (TaskSpec& task : out.tasks) {
        const int col = find_label_column(dataset, task.name);
        const LabelColumn& column = dataset.labels[static_cast<std::size_t>(col)];
        if ((column.kind == TaskKind::classification) != (task.kind == TaskKind::classification))
            throw std::runtime_error("train: task '" + task.name +
                                     "' kind does not match the dataset column");
        if (task.kind == TaskKind::classification && task.num_classes == 0)
            task.num_classes = column.num_classes;
    }
    return out;
}

std::pair<ModelParams, TrainReport> train(const Dataset& dataset, const ModelConfig& model_config,
                                          const TrainConfig& train_config) {
    TrainLoopSpec spec;
    spec.learn_selection = true;
    return run_training(dataset, model_config, train_config, spec);
}

std::pair<ModelParams, TrainReport> train_fixed_mask(const Dataset& dataset,
                                                     const std::vector<int>& indices,
                                                     const ModelConfig& model_config,
                                                     const TrainConfig& train_config) {
    TrainLoopSpec spec;
    spec.learn_selection = false;
    spec.fixed_mask = indicator_mask(model_config.d, indices);
    return run_training(dataset, model_config, train_config, spec);
}

std::vector<MetricRecord> evaluate(const ModelParams& params, const Dataset& dataset, Split split,
                                   const std::vector<TaskSpec>& tasks, int k) {
    std::vector<double> mask(static_cast<std::size_t>(params.scores.dim(0)), 0.0);
    for (int idx : topk_indices(params.scores.values(), k)) mask[static_cast<std::size_t>(idx)] = 1.0;
    return evaluate_with_mask(params, dataset, split, tasks, mask);
}

std::vector<MetricRecord> evaluate_with_mask(const ModelParams& params, const Dataset& dataset,
                                             Split split, const std::vector<TaskSpec>& tasks,
                                             const std::vector<double>& hard_mask) {
    const std::vector<int> rows = dataset.rows_in(split);
    std::vector<MetricRecord> records;
    if (rows.empty()) {
        for (const TaskSpec& t : tasks) {
            MetricRecord r;
            r.task_name = t.name;
            records.push_back(std::move(r));
        }
        return records;
    }

    Tape tape;  // scratch; nothing here requires gradients
    const Tensor x = gather_rows(dataset, rows);
    const Tensor mask = Tensor::from({dataset.d}, hard_mask);
    ModelParams frozen;
    frozen.scores = params.scores.detach();
    for (const Tensor& t : params.encoder_weights) frozen.encoder_weights.push_back(t.detach());
    for (const Tensor& t : params.encoder_biases) frozen.encoder_biases.push_back(t.detach());
    for (const Tensor& t : params.head_weights) frozen.head_weights.push_back(t.detach());
    for (const Tensor& t : params.head_biases) frozen.head_biases.push_back(t.detach());

    const Tensor masked = mul(tape, x, mask);
    const Tensor latent = encode(tape, masked, frozen);

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const TaskSpec& task = tasks[t];
        MetricRecord record;
        record.task_name = task.name;

        int col = -1;
        for (std::size_t c = 0; c < dataset.labels.size(); ++c)
            if (dataset.labels[c].name == task.name) col = static_cast<int>(c);
        if (col < 0) throw std::runtime_error("evaluate: no label column '" + task.name + "'");
        const LabelColumn& column = dataset.labels[static_cast<std::size_t>(col)];

        const Tensor pred = predict(tape, latent, static_cast<int>(t), frozen);

        if (task.kind == TaskKind::classification) {
            const Tensor probs = softmax_rows(tape, pred);
            std::vector<int> pred_classes;
            std::vector<int> true_classes;
            std::vector<double> labeled_probs;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double label = column.values[static_cast<std::size_t>(rows[i])];
                if (label == -1.0) continue;
                true_classes.push_back(static_cast<int>(std::llround(label)));
                const double* row =
                    probs.values().data() + i * static_cast<std::size_t>(task.num_classes);
                int best = 0;
                for (int c = 1; c < task.num_classes; ++c)
                    if (row[c] > row[best]) best = c;
                pred_classes.push_back(best);
                labeled_probs.insert(labeled_probs.end(), row, row + task.num_classes);
            }
            record.evaluated_samples = static_cast<int>(true_classes.size());
            if (!true_classes.empty()) {
                record.f1_macro = f1_macro(pred_classes, true_classes, task.num_classes);
                record.accuracy = accuracy(pred_classes, true_classes);
                record.auroc_macro_ovr =
                    auroc_macro_ovr(labeled_probs, task.num_classes, true_classes);
                record.auprc_macro = auprc_macro(labeled_probs, task.num_classes, true_classes);
            }
        } else {
            double total = 0.0;
            int count = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double target = column.values[static_cast<std::size_t>(rows[i])];
                if (std::isnan(target)) continue;
                const double diff = pred.values()[i * static_cast<std::size_t>(task.output_dim)] - target;
                total += diff * diff;
                ++count;
            }
            record.evaluated_samples = count;
            if (count > 0) record.mse = total / count;
        }
        records.push_back(std::move(record));
    }
    return records;
}

ModelConfig single_task_mode(const ModelConfig& config, int task_index) {
    if (task_index < 0 || task_index >= static_cast<int>(config.tasks.size()))
        throw std::invalid_argument("single_task_mode: task index " + std::to_string(task_index) +
                                    " out of range");
    ModelConfig out = config;
    out.tasks = {config.tasks[static_cast<std::size_t>(task_index)]};
    return out;
}

namespace {

json nan_to_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

json metric_record_to_json(const MetricRecord& record) {
    return json{{"task", record.task_name},
                {"f1_macro", nan_to_null(record.f1_macro)},
                {"accuracy", nan_to_null(record.accuracy)},
                {"auroc_macro_ovr", nan_to_null(record.auroc_macro_ovr)},
                {"auprc_macro", nan_to_null(record.auprc_macro)},
                {"mse", nan_to_null(record.mse)},
                {"evaluated_samples", record.evaluated_samples}};
}

json report_to_json(const TrainReport& report) {
    json evals = json::array();
    for (const EvalPoint& point : report.evals) {
        json per_task = json::array();
        for (const MetricRecord& r : point.per_task) per_task.push_back(metric_record_to_json(r));
        evals.push_back(json{{"epoch", point.epoch}, {"step", point.step}, {"per_task", per_task}});
    }
    json final_metrics = json::array();
    for (const MetricRecord& r : report.final_metrics)
        final_metrics.push_back(metric_record_to_json(r));

    return json{
        {"evals", std::move(evals)},
        {"final_metrics", std::move(final_metrics)},
        {"selected_features", report.selected_features},
        {"selected_feature_names_by_score", report.selected_feature_names_by_score},
        {"final_scores", report.final_scores},
        {"loss_trace", report.loss_trace},
        {"tau_trace", report.tau_trace},
        {"k_trace", report.k_trace},
        {"schedules",
         json{{"tau0", report.tau_schedule.tau0},
              {"tau_rate", report.tau_schedule.rate},
              {"tau_min", report.tau_schedule.tau_min},
              {"d", report.k_schedule.d},
              {"k_final", report.k_schedule.k_final},
              {"warmup_steps", report.k_schedule.warmup_steps},
              {"decay_steps", report.k_schedule.decay_steps}}},
        {"total_steps", report.total_steps},
        {"selection_precision", nan_to_null(report.selection_precision)},
        {"selection_recall", nan_to_null(report.selection_recall)}};
}

}  // namespace topkfs
