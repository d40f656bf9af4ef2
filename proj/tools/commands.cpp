#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "topkfs/baselines.hpp"
#include "topkfs/gradcheck.hpp"
#include "topkfs/metrics.hpp"

namespace topkfs::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_json_file(const std::string& path, const json& j) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

json nan_to_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

TaskKind parse_kind(const std::string& kind) {
    if (kind == "classification") return TaskKind::classification;
    if (kind == "regression") return TaskKind::regression;
    throw std::runtime_error("unknown task kind '" + kind + "'");
}

std::string kind_name(TaskKind kind) {
    return kind == TaskKind::classification ? "classification" : "regression";
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

AppConfig config_from_json_doc(const json& j) {
    AppConfig config;
    if (j.contains("data")) {
        const json& d = j.at("data");
        if (d.contains("label_columns")) {
            for (const auto& c : d.at("label_columns")) {
                LabelColumnSpec spec;
                spec.name = c.at("name").get<std::string>();
                if (c.contains("kind")) spec.kind = parse_kind(c.at("kind").get<std::string>());
                maybe(c, "num_classes", spec.num_classes);
                config.data.label_columns.push_back(std::move(spec));
            }
        }
        maybe(d, "binarize", config.data.binarize);
        maybe(d, "binarize_threshold", config.data.binarize_threshold);
        maybe(d, "hvg_top", config.data.hvg_top);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        maybe(m, "k_final", config.model.k_final);
        maybe(m, "encoder_layers", config.model.encoder_layers);
        maybe(m, "latent_dim", config.model.latent_dim);
        maybe(m, "tau0", config.model.tau0);
        maybe(m, "tau_min", config.model.tau_min);
        maybe(m, "tau_rate", config.model.tau_rate);
        maybe(m, "warmup_steps", config.model.warmup_steps);
        maybe(m, "decay_steps", config.model.decay_steps);
        maybe(m, "warmup_frac", config.model.warmup_frac);
        maybe(m, "decay_frac", config.model.decay_frac);
        maybe(m, "noise_scale0", config.model.noise_scale0);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        maybe(t, "epochs", config.train.epochs);
        maybe(t, "batch_size", config.train.batch_size);
        maybe(t, "learning_rate", config.train.learning_rate);
        maybe(t, "adam_beta1", config.train.adam_beta1);
        maybe(t, "adam_beta2", config.train.adam_beta2);
        maybe(t, "adam_eps", config.train.adam_eps);
        maybe(t, "eval_every", config.train.eval_every);
        maybe(t, "seed", config.train.seed);
    }
    return config;
}

}  // namespace

AppConfig load_config(const std::string& path) {
    if (path.empty()) return AppConfig{};
    return config_from_json_doc(read_json_file(path));
}

json config_to_json(const AppConfig& config) {
    json label_columns = json::array();
    for (const auto& c : config.data.label_columns)
        label_columns.push_back({{"name", c.name},
                                 {"kind", kind_name(c.kind)},
                                 {"num_classes", c.num_classes}});
    json tasks = json::array();
    for (const auto& t : config.model.tasks)
        tasks.push_back({{"name", t.name},
                         {"kind", kind_name(t.kind)},
                         {"num_classes", t.num_classes},
                         {"output_dim", t.output_dim}});
    return json{
        {"data",
         {{"label_columns", std::move(label_columns)},
          {"binarize", config.data.binarize},
          {"binarize_threshold", config.data.binarize_threshold},
          {"hvg_top", config.data.hvg_top}}},
        {"model",
         {{"d", config.model.d},
          {"k_final", config.model.k_final},
          {"encoder_layers", config.model.encoder_layers},
          {"latent_dim", config.model.latent_dim},
          {"tasks", std::move(tasks)},
          {"tau0", config.model.tau0},
          {"tau_min", config.model.tau_min},
          {"tau_rate", config.model.tau_rate},
          {"warmup_steps", config.model.warmup_steps},
          {"decay_steps", config.model.decay_steps},
          {"warmup_frac", config.model.warmup_frac},
          {"decay_frac", config.model.decay_frac},
          {"noise_scale0", config.model.noise_scale0},
          {"seed", config.model.seed}}},
        {"train",
         {{"epochs", config.train.epochs},
          {"batch_size", config.train.batch_size},
          {"learning_rate", config.train.learning_rate},
          {"adam_beta1", config.train.adam_beta1},
          {"adam_beta2", config.train.adam_beta2},
          {"adam_eps", config.train.adam_eps},
          {"eval_every", config.train.eval_every},
          {"seed", config.train.seed}}}};
}

namespace {

// Default when no config names label columns: every CSV column whose name
// starts with "task" is a classification label, matching cmd_synth output.
std::vector<LabelColumnSpec> default_label_columns(const std::string& data_path) {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open " + data_path);
    std::string header;
    std::getline(in, header);
    std::vector<LabelColumnSpec> specs;
    std::size_t start = 0;
    while (start <= header.size()) {
        std::size_t pos = header.find(',', start);
        if (pos == std::string::npos) pos = header.size();
        std::string name = header.substr(start, pos - start);
        if (!name.empty() && name.back() == '\r') name.pop_back();
        if (name.rfind("task", 0) == 0)
            specs.push_back(LabelColumnSpec{name, TaskKind::classification, 0});
        start = pos + 1;
    }
    if (specs.empty())
        throw std::runtime_error("no label columns configured and no 'task*' columns in " +
                                 data_path);
    return specs;
}

}  // namespace

Dataset load_dataset(const AppConfig& config, const std::string& data_path,
                     const std::string& truth_path) {
    Dataset ds = load_csv(data_path, config.data.label_columns);
    if (config.data.hvg_top > 0 && config.data.hvg_top < ds.d)
        ds = hvg_filter(ds, config.data.hvg_top);
    if (config.data.binarize) ds = binarize(ds, config.data.binarize_threshold);
    if (!truth_path.empty()) {
        const json truth = read_json_file(truth_path);
        ds.ground_truth_features = truth.at("indices").get<std::vector<int>>();
        std::sort(ds.ground_truth_features.begin(), ds.ground_truth_features.end());
    }
    return ds;
}

namespace {

// Tasks mirror the configured label columns unless a named override
// restricts training to a single one.
std::vector<TaskSpec> tasks_from_config(const AppConfig& config, const std::string& only_task) {
    std::vector<TaskSpec> tasks;
    for (const LabelColumnSpec& c : config.data.label_columns) {
        if (!only_task.empty() && c.name != only_task) continue;
        TaskSpec spec;
        spec.name = c.name;
        spec.kind = c.kind;
        spec.num_classes = c.num_classes;
        spec.output_dim = 1;
        tasks.push_back(std::move(spec));
    }
    if (tasks.empty())
        throw std::runtime_error(only_task.empty()
                                     ? std::string("config names no label columns")
                                     : "no label column named '" + only_task + "'");
    return tasks;
}

struct RunResult {
    ModelParams params;
    TrainReport report;
    ModelConfig model;
    TrainConfig train;
};

RunResult run_one_seed(const AppConfig& config, const Dataset& ds, int seed) {
    AppConfig effective = config;
    effective.model.seed = seed;
    effective.train.seed = seed;
    effective.model.d = ds.d;
    const Dataset with_split = make_split(ds, static_cast<std::uint64_t>(seed));
    const ModelConfig resolved = resolve_tasks(effective.model, with_split);
    auto [params, report] = train(with_split, resolved, effective.train);
    return RunResult{std::move(params), std::move(report), resolved, effective.train};
}

json train_output_json(const AppConfig& config, const RunResult& run, const Dataset& ds,
                       const std::string& data_path, int seed) {
    AppConfig effective = config;
    effective.model = run.model;
    effective.train = run.train;
    return json{{"schema_version", kSchemaVersion},
                {"kind", "topkfs-train-report"},
                {"timestamp", timestamp_utc()},
                {"seed", seed},
                {"data", {{"path", data_path}, {"n", ds.n}, {"d", ds.d}}},
                {"effective_config", config_to_json(effective)},
                {"report", report_to_json(run.report)}};
}

void write_selected_features(const std::string& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const std::string& name : report.selected_feature_names_by_score) out << name << '\n';
}

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
};

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate agg;
    if (values.empty()) return agg;
    for (double v : values) agg.mean += v;
    agg.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
        agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return agg;
}

json summarize_metric(const std::vector<std::vector<MetricRecord>>& per_seed,
                      const std::vector<TaskSpec>& tasks) {
    json out = json::array();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        json entry{{"task", tasks[t].name}};
        auto collect = [&](auto getter, const char* key) {
            std::vector<double> values;
            for (const auto& records : per_seed) {
                const double v = getter(records[t]);
                if (!std::isnan(v)) values.push_back(v);
            }
            const Aggregate agg = aggregate(values);
            entry[key] = values.empty()
                             ? json(nullptr)
                             : json{{"mean", agg.mean}, {"std", agg.stddev}};
        };
        collect([](const MetricRecord& r) { return r.f1_macro; }, "f1_macro");
        collect([](const MetricRecord& r) { return r.accuracy; }, "accuracy");
        collect([](const MetricRecord& r) { return r.auroc_macro_ovr; }, "auroc_macro_ovr");
        collect([](const MetricRecord& r) { return r.auprc_macro; }, "auprc_macro");
        collect([](const MetricRecord& r) { return r.mse; }, "mse");
        out.push_back(std::move(entry));
    }
    return out;
}

std::string seed_dir(const std::string& out_dir, int seed) {
    return (fs::path(out_dir) / ("seed_" + std::to_string(seed))).string();
}

}  // namespace

int cmd_synth(const SynthOptions& options) {
    SynthSpec spec;
    spec.n = options.n;
    spec.d = options.d;
    spec.g = options.g;
    spec.shared_fraction = options.shared_fraction;
    spec.noise_sigma = options.noise_sigma;
    spec.seed = options.seed;
    if (options.nonlinearity == "linear") {
        spec.nonlinearity = Nonlinearity::linear;
    } else if (options.nonlinearity == "xor") {
        spec.nonlinearity = Nonlinearity::xor_pairs;
    } else {
        throw std::runtime_error("unknown nonlinearity '" + options.nonlinearity + "'");
    }
    for (const std::string& text : options.tasks) {
        SynthTask task;
        std::string head = text;
        const std::size_t colon = text.find(':');
        if (colon != std::string::npos) {
            head = text.substr(0, colon);
            task.missing_rate = std::stod(text.substr(colon + 1));
        }
        if (head.empty()) throw std::runtime_error("empty task spec");
        if (head[0] == 'c') {
            task.kind = TaskKind::classification;
            task.num_classes = std::stoi(head.substr(1));
        } else if (head == "r") {
            task.kind = TaskKind::regression;
        } else {
            throw std::runtime_error("bad task spec '" + text + "' (want c<classes> or r)");
        }
        spec.tasks.push_back(task);
    }

    const Dataset ds = generate_synthetic(spec);
    fs::path out(options.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_csv(ds, options.out);

    json sidecar{{"schema_version", kSchemaVersion},
                 {"kind", "topkfs-ground-truth"},
                 {"timestamp", timestamp_utc()},
                 {"indices", ds.ground_truth_features},
                 {"spec",
                  {{"n", spec.n},
                   {"d", spec.d},
                   {"g", spec.g},
                   {"shared_fraction", spec.shared_fraction},
                   {"noise_sigma", spec.noise_sigma},
                   {"nonlinearity", options.nonlinearity},
                   {"seed", spec.seed},
                   {"tasks", options.tasks}}}};
    const std::string sidecar_path = options.out + ".truth.json";
    write_json_file(sidecar_path, sidecar);
    if (!options.quiet)
        std::cout << "wrote " << options.out << " (" << ds.n << " x " << ds.d << ") and "
                  << sidecar_path << "\n";
    return 0;
}

int cmd_train(const TrainOptions& options) {
    AppConfig config = load_config(options.config_path);
    if (options.epochs_override > 0) config.train.epochs = options.epochs_override;
    if (options.k_override > 0) config.model.k_final = options.k_override;
    if (config.data.label_columns.empty())
        config.data.label_columns = default_label_columns(options.data_path);

    Dataset ds = load_dataset(config, options.data_path, options.truth_path);
    config.model.tasks = tasks_from_config(config, options.task_override);
    if (!options.task_override.empty()) {
        // keep only the overridden column spec so the echoed config matches
        std::vector<LabelColumnSpec> kept;
        for (const auto& c : config.data.label_columns)
            if (c.name == options.task_override) kept.push_back(c);
        config.data.label_columns = kept;
    }

    std::vector<std::vector<MetricRecord>> per_seed;
    std::vector<TaskSpec> resolved_tasks;
    for (int seed : options.seeds) {
        RunResult run = run_one_seed(config, ds, seed);
        const std::string dir = seed_dir(options.out_dir, seed);
        write_json_file((fs::path(dir) / "report.json").string(),
                        train_output_json(config, run, ds, options.data_path, seed));
        save_checkpoint((fs::path(dir) / "checkpoint.json").string(), run.model, run.params);
        write_selected_features((fs::path(dir) / "selected_features.txt").string(), run.report);
        resolved_tasks = resolve_tasks(run.model, ds).tasks;
        per_seed.push_back(run.report.final_metrics);
        if (!options.quiet) {
            std::cout << "seed " << seed << ": ";
            for (const MetricRecord& r : run.report.final_metrics)
                std::cout << r.task_name << " f1=" << r.f1_macro << " acc=" << r.accuracy << "  ";
            std::cout << "\n";
        }
    }

    json summary{{"schema_version", kSchemaVersion},
                 {"kind", "topkfs-train-summary"},
                 {"timestamp", timestamp_utc()},
                 {"seeds", options.seeds},
                 {"effective_config", config_to_json(config)},
                 {"per_task", summarize_metric(per_seed, resolved_tasks)}};
    write_json_file((fs::path(options.out_dir) / "summary.json").string(), summary);
    return 0;
}

int cmd_eval(const EvalOptions& options) {
    auto [model_config, params] = load_checkpoint(options.checkpoint_path);

    AppConfig config = load_config(options.config_path);
    if (config.data.label_columns.empty()) {
        for (const TaskSpec& t : model_config.tasks)
            config.data.label_columns.push_back(LabelColumnSpec{t.name, t.kind, t.num_classes});
    }
    Dataset ds = load_dataset(config, options.data_path, "");
    if (ds.d != model_config.d)
        throw std::runtime_error("eval: dataset has " + std::to_string(ds.d) +
                                 " features but the checkpoint expects " +
                                 std::to_string(model_config.d));

    const int split_seed = options.seed_override >= 0 ? options.seed_override : model_config.seed;
    const Dataset with_split = make_split(ds, static_cast<std::uint64_t>(split_seed));
    const std::vector<TaskSpec> tasks = resolve_tasks(model_config, with_split).tasks;
    const std::vector<MetricRecord> metrics =
        evaluate(params, with_split, Split::test, tasks, model_config.k_final);

    json records = json::array();
    for (const MetricRecord& r : metrics) records.push_back(metric_record_to_json(r));
    json out{{"schema_version", kSchemaVersion},
             {"kind", "topkfs-eval"},
             {"timestamp", timestamp_utc()},
             {"checkpoint", options.checkpoint_path},
             {"data", {{"path", options.data_path}, {"n", ds.n}, {"d", ds.d}}},
             {"split_seed", split_seed},
             {"metrics", std::move(records)}};
    write_json_file(options.out_path, out);
    for (const MetricRecord& r : metrics)
        std::cout << r.task_name << ": f1=" << r.f1_macro << " acc=" << r.accuracy
                  << " auroc=" << r.auroc_macro_ovr << " auprc=" << r.auprc_macro << "\n";
    return 0;
}

int cmd_ablate(const AblateOptions& options) {
    AppConfig config = load_config(options.config_path);
    if (options.epochs_override > 0) config.train.epochs = options.epochs_override;
    if (options.k_override > 0) config.model.k_final = options.k_override;
    if (config.data.label_columns.empty())
        config.data.label_columns = default_label_columns(options.data_path);
    Dataset ds = load_dataset(config, options.data_path, "");
    config.model.tasks = tasks_from_config(config, "");

    const std::size_t n_tasks = config.model.tasks.size();

    // single-task runs: one model per task with the multi-task architecture
    std::vector<std::vector<std::vector<MetricRecord>>> single_runs(n_tasks);
    for (std::size_t t = 0; t < n_tasks; ++t) {
        AppConfig single = config;
        single.model = single_task_mode(config.model, static_cast<int>(t));
        for (int seed : options.seeds) {
            RunResult run = run_one_seed(single, ds, seed);
            const std::string dir =
                seed_dir((fs::path(options.out_dir) / ("single_" + single.model.tasks[0].name))
                             .string(),
                         seed);
            write_json_file((fs::path(dir) / "report.json").string(),
                            train_output_json(single, run, ds, options.data_path, seed));
            save_checkpoint((fs::path(dir) / "checkpoint.json").string(), run.model, run.params);
            write_selected_features((fs::path(dir) / "selected_features.txt").string(),
                                    run.report);
            single_runs[t].push_back(run.report.final_metrics);
        }
    }

    // joint multi-task runs
    std::vector<std::vector<MetricRecord>> multi_runs;
    std::vector<TaskSpec> resolved_tasks;
    for (int seed : options.seeds) {
        RunResult run = run_one_seed(config, ds, seed);
        const std::string dir =
            seed_dir((fs::path(options.out_dir) / "multitask").string(), seed);
        write_json_file((fs::path(dir) / "report.json").string(),
                        train_output_json(config, run, ds, options.data_path, seed));
        save_checkpoint((fs::path(dir) / "checkpoint.json").string(), run.model, run.params);
        write_selected_features((fs::path(dir) / "selected_features.txt").string(), run.report);
        resolved_tasks = resolve_tasks(run.model, ds).tasks;
        multi_runs.push_back(run.report.final_metrics);
    }

    // comparison: single-task metric vs the same task inside the joint model
    json comparison = json::array();
    std::string table = "task                 mode         f1_mean   f1_std\n";
    char line[128];
    for (std::size_t t = 0; t < n_tasks; ++t) {
        std::vector<double> single_f1, multi_f1;
        for (const auto& records : single_runs[t])
            if (!std::isnan(records[0].f1_macro)) single_f1.push_back(records[0].f1_macro);
        for (const auto& records : multi_runs)
            if (!std::isnan(records[t].f1_macro)) multi_f1.push_back(records[t].f1_macro);
        const Aggregate s = aggregate(single_f1);
        const Aggregate m = aggregate(multi_f1);
        comparison.push_back(json{{"task", resolved_tasks[t].name},
                                  {"single_task_f1", {{"mean", s.mean}, {"std", s.stddev}}},
                                  {"multitask_f1", {{"mean", m.mean}, {"std", m.stddev}}}});
        std::snprintf(line, sizeof(line), "%-20s single     %9.4f %8.4f\n",
                      resolved_tasks[t].name.c_str(), s.mean, s.stddev);
        table += line;
        std::snprintf(line, sizeof(line), "%-20s multitask  %9.4f %8.4f\n",
                      resolved_tasks[t].name.c_str(), m.mean, m.stddev);
        table += line;
    }

    json out{{"schema_version", kSchemaVersion},
             {"kind", "topkfs-ablation"},
             {"timestamp", timestamp_utc()},
             {"seeds", options.seeds},
             {"effective_config", config_to_json(config)},
             {"comparison", std::move(comparison)}};
    write_json_file((fs::path(options.out_dir) / "ablation.json").string(), out);
    std::ofstream table_file((fs::path(options.out_dir) / "ablation.txt").string());
    table_file << table;
    if (!options.quiet) std::cout << table;
    return 0;
}

int cmd_baseline(const BaselineOptions& options) {
    AppConfig config = load_config(options.config_path);
    if (options.epochs_override > 0) config.train.epochs = options.epochs_override;
    if (config.data.label_columns.empty())
        config.data.label_columns = default_label_columns(options.data_path);
    Dataset ds = load_dataset(config, options.data_path, options.truth_path);
    config.model.tasks = tasks_from_config(config, "");
    const int k = options.k > 0 ? options.k : config.model.k_final;
    if (k < 1 || k > ds.d) throw std::runtime_error("baseline: k outside [1, d]");

    std::string task_name = options.task;
    if (task_name.empty()) {
        for (const auto& c : config.data.label_columns)
            if (c.kind == TaskKind::classification) {
                task_name = c.name;
                break;
            }
        if (task_name.empty())
            throw std::runtime_error("baseline: no classification task available for mRMR");
    }

    json per_seed = json::array();
    std::vector<std::vector<MetricRecord>> metric_runs;
    std::vector<TaskSpec> resolved_tasks;
    for (int seed : options.seeds) {
        AppConfig effective = config;
        effective.model.seed = seed;
        effective.train.seed = seed;
        effective.model.d = ds.d;
        effective.model.k_final = k;
        const Dataset with_split = make_split(ds, static_cast<std::uint64_t>(seed));

        // selection sees only the training rows
        const Dataset train_part = subset_rows(with_split, with_split.rows_in(Split::train));
        int col = -1;
        for (std::size_t c = 0; c < train_part.labels.size(); ++c)
            if (train_part.labels[c].name == task_name) col = static_cast<int>(c);
        if (col < 0) throw std::runtime_error("baseline: no label column '" + task_name + "'");
        const std::vector<int> selected =
            mrmr_select(train_part, train_part.labels[static_cast<std::size_t>(col)].values, k);

        const std::vector<MetricRecord> metrics =
            retrain_fixed_mask(with_split, selected, effective.model, effective.train);
        resolved_tasks = resolve_tasks(effective.model, with_split).tasks;
        metric_runs.push_back(metrics);

        std::vector<int> sorted = selected;
        std::sort(sorted.begin(), sorted.end());
        json records = json::array();
        for (const MetricRecord& r : metrics) records.push_back(metric_record_to_json(r));
        json entry{{"seed", seed},
                   {"selected_indices", sorted},
                   {"selection_order", selected},
                   {"metrics", std::move(records)}};
        if (!with_split.ground_truth_features.empty()) {
            auto [precision, recall] =
                selection_recovery(sorted, with_split.ground_truth_features);
            entry["selection_precision"] = nan_to_null(precision);
            entry["selection_recall"] = nan_to_null(recall);
        }
        per_seed.push_back(std::move(entry));
    }

    json out{{"schema_version", kSchemaVersion},
             {"kind", "topkfs-baseline"},
             {"timestamp", timestamp_utc()},
             {"method", "mrmr-f"},
             {"task", task_name},
             {"k", k},
             {"seeds", options.seeds},
             {"effective_config", config_to_json(config)},
             {"runs", std::move(per_seed)},
             {"per_task", summarize_metric(metric_runs, resolved_tasks)}};
    write_json_file((fs::path(options.out_dir) / "baseline.json").string(), out);
    if (!options.quiet)
        std::cout << "baseline mrmr-f (k=" << k << ", task=" << task_name << ") written to "
                  << options.out_dir << "\n";
    return 0;
}

int cmd_gradcheck() {
    bool all_passed = true;
    for (const GradCheckResult& r : gradcheck_suite()) {
        std::printf("%-28s max_rel_err=%10.3e tol=%7.0e %s\n", r.name.c_str(), r.max_rel_error,
                    r.tolerance, r.passed ? "PASS" : "FAIL");
        all_passed &= r.passed;
    }
    return all_passed ? 0 : 1;
}

}  // namespace topkfs::cli
