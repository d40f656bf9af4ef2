#include <cmath>
#include <vector>

#include "doctest.h"
#include "topkfs/data.hpp"
#include "topkfs/rng.hpp"
#include "topkfs/trainer.hpp"

using namespace topkfs;

namespace {

// Linearly separable binary toy with a margin: label = sign of x0 - x1,
// and no point lands within 0.1 of the boundary.
Dataset separable_toy(int n, std::uint64_t seed) {
    Dataset ds;
    ds.n = n;
    ds.d = 2;
    ds.feature_names = {"f0", "f1"};
    Rng rng(seed);
    LabelColumn col;
    col.name = "y";
    col.kind = TaskKind::classification;
    col.num_classes = 2;
    for (int i = 0; i < n; ++i) {
        double a, b;
        do {
            a = rng.uniform(-1.0, 1.0);
            b = rng.uniform(-1.0, 1.0);
        } while (std::abs(a - b) < 0.1);
        ds.x.push_back(a);
        ds.x.push_back(b);
        col.values.push_back(a > b ? 1.0 : 0.0);
    }
    ds.labels.push_back(std::move(col));
    return ds;
}

ModelConfig toy_model() {
    ModelConfig config;
    config.d = 2;
    config.k_final = 2;
    config.encoder_layers = {};
    config.latent_dim = 4;
    config.tasks = {TaskSpec{"y", TaskKind::classification, 2, 1}};
    return config;
}

}  // namespace

TEST_CASE("adam_step") {
    TrainConfig config;
    config.learning_rate = 0.1;

    SUBCASE("first step against a unit gradient moves by about -lr") {
        std::vector<Tensor> params{Tensor::from({1}, {0.0}, true)};
        params[0].storage()->grad = {1.0};
        AdamState state;
        adam_step(params, state, config);
        CHECK(std::abs(params[0].values()[0] + 0.1) < 1e-8);
    }
    SUBCASE("constant gradient moves the parameter monotonically against it") {
        std::vector<Tensor> params{Tensor::from({1}, {0.0}, true)};
        AdamState state;
        double previous = 0.0;
        for (int step = 0; step < 50; ++step) {
            params[0].storage()->grad = {2.5};
            adam_step(params, state, config);
            CHECK(params[0].values()[0] < previous);
            previous = params[0].values()[0];
        }
    }
    SUBCASE("zero gradient leaves the parameter unchanged") {
        std::vector<Tensor> params{Tensor::from({1}, {1.25}, true)};
        params[0].storage()->grad = {0.0};
        AdamState state;
        adam_step(params, state, config);
        CHECK(params[0].values()[0] == 1.25);
    }
}

TEST_CASE("training solves the linearly separable toy") {
    Dataset ds = make_split(separable_toy(200, 1), 1);
    ModelConfig model = toy_model();
    TrainConfig config;
    config.epochs = 200;
    config.batch_size = 32;
    config.eval_every = 50;
    config.seed = 1;
    config.learning_rate = 0.01;

    auto [params, report] = train(ds, model, config);
    const std::vector<MetricRecord> train_metrics =
        evaluate(params, ds, Split::train, model.tasks, model.k_final);
    CHECK(train_metrics[0].accuracy == 1.0);

    SUBCASE("loss decreases in a 10-epoch moving average") {
        // steps per epoch times 10
        const std::size_t window = 10 * ((200 + config.batch_size - 1) / config.batch_size);
        REQUIRE(report.loss_trace.size() > 3 * window);
        auto avg = [&](std::size_t start) {
            double total = 0.0;
            for (std::size_t i = start; i < start + window; ++i) total += report.loss_trace[i];
            return total / static_cast<double>(window);
        };
        double previous = avg(0);
        for (std::size_t start = window; start + window <= report.loss_trace.size();
             start += window) {
            const double current = avg(start);
            CHECK(current <= previous + 1e-9);
            previous = current;
        }
    }
}

TEST_CASE("training is deterministic per seed") {
    Dataset ds = make_split(separable_toy(120, 7), 7);
    ModelConfig model = toy_model();
    model.k_final = 1;
    TrainConfig config;
    config.epochs = 12;
    config.batch_size = 16;
    config.eval_every = 4;
    config.seed = 7;

    auto [params_a, report_a] = train(ds, model, config);
    auto [params_b, report_b] = train(ds, model, config);
    CHECK(report_to_json(report_a).dump() == report_to_json(report_b).dump());
    for (std::size_t i = 0; i < params_a.scores.numel(); ++i)
        CHECK(params_a.scores.values()[i] == params_b.scores.values()[i]);

    TrainConfig other = config;
    other.seed = 8;
    auto [params_c, report_c] = train(ds, model, other);
    CHECK(report_to_json(report_a).dump() != report_to_json(report_c).dump());
}

TEST_CASE("schedule traces are bookkeeping of the schedules") {
    Dataset ds = make_split(separable_toy(100, 2), 2);
    ModelConfig model = toy_model();
    model.k_final = 1;
    model.warmup_steps = 5;
    model.decay_steps = 10;
    model.tau_rate = 0.01;
    TrainConfig config;
    config.epochs = 10;
    config.batch_size = 20;
    config.seed = 2;

    auto [params, report] = train(ds, model, config);
    REQUIRE(static_cast<long>(report.k_trace.size()) == report.total_steps);
    for (long t = 0; t < report.total_steps; ++t) {
        CHECK(report.k_trace[static_cast<std::size_t>(t)] == k_at(report.k_schedule, t));
        CHECK(report.tau_trace[static_cast<std::size_t>(t)] ==
              temperature_at(report.tau_schedule, t));
        if (t > 0)
            CHECK(report.k_trace[static_cast<std::size_t>(t)] <=
                  report.k_trace[static_cast<std::size_t>(t - 1)]);
    }
    CHECK(report.k_trace.back() == model.k_final);
}

TEST_CASE("evaluation predictions depend only on the selected features") {
    SynthSpec spec;
    spec.n = 150;
    spec.d = 12;
    spec.g = 3;
    spec.tasks = {SynthTask{TaskKind::classification, 3, 0.0}};
    spec.noise_sigma = 0.2;
    spec.seed = 11;
    Dataset ds = make_split(generate_synthetic(spec), 11);

    ModelConfig model;
    model.d = 12;
    model.k_final = 3;
    model.encoder_layers = {8};
    model.latent_dim = 4;
    model.tasks = {TaskSpec{"task0", TaskKind::classification, 3, 1}};
    TrainConfig config;
    config.epochs = 20;
    config.batch_size = 32;
    config.eval_every = 0;
    config.seed = 11;

    auto [params, report] = train(ds, model, config);
    Rng rng(99);
    Dataset perturbed = ds;
    for (int j = 0; j < ds.d; ++j) {
        const bool selected =
            std::find(report.selected_features.begin(), report.selected_features.end(), j) !=
            report.selected_features.end();
        if (selected) continue;
        for (int i = 0; i < ds.n; ++i)
            perturbed.x[static_cast<std::size_t>(i) * ds.d + j] = rng.uniform(-100.0, 100.0);
    }
    const auto before = evaluate(params, ds, Split::test, model.tasks, model.k_final);
    const auto after = evaluate(params, perturbed, Split::test, model.tasks, model.k_final);
    CHECK(before[0].accuracy == after[0].accuracy);
    CHECK(before[0].f1_macro == after[0].f1_macro);
    CHECK(before[0].auroc_macro_ovr == after[0].auroc_macro_ovr);
    CHECK(before[0].auprc_macro == after[0].auprc_macro);
}

TEST_CASE("NaN loss aborts with a diagnostic") {
    Dataset ds = make_split(separable_toy(60, 3), 3);
    ModelConfig model = toy_model();
    TrainConfig config;
    config.epochs = 3;
    config.batch_size = 20;
    config.seed = 3;
    config.learning_rate = 1e200;  // blows the parameters up immediately

    try {
        train(ds, model, config);
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("NaN") != std::string::npos);
    }
}

TEST_CASE("single_task_mode restricts to one task") {
    ModelConfig model = toy_model();
    model.tasks = {TaskSpec{"a", TaskKind::classification, 2, 1},
                   TaskSpec{"b", TaskKind::regression, 0, 1}};
    ModelConfig only_b = single_task_mode(model, 1);
    REQUIRE(only_b.tasks.size() == 1);
    CHECK(only_b.tasks[0].name == "b");
    CHECK(only_b.d == model.d);
    CHECK_THROWS_AS(single_task_mode(model, 2), std::invalid_argument);
}

TEST_CASE("train_fixed_mask freezes the selection") {
    SynthSpec spec;
    spec.n = 100;
    spec.d = 6;
    spec.g = 2;
    spec.tasks = {SynthTask{TaskKind::classification, 2, 0.0}};
    spec.seed = 21;
    Dataset ds = make_split(generate_synthetic(spec), 21);

    ModelConfig model;
    model.d = 6;
    model.k_final = 2;
    model.encoder_layers = {};
    model.latent_dim = 3;
    model.tasks = {TaskSpec{"task0", TaskKind::classification, 2, 1}};
    TrainConfig config;
    config.epochs = 10;
    config.batch_size = 25;
    config.eval_every = 0;
    config.seed = 21;

    const std::vector<int> indices{1, 4};
    auto [params, report] = train_fixed_mask(ds, indices, model, config);
    CHECK(report.selected_features == indices);
    // frozen scores remain at their initialization
    Rng rng(static_cast<std::uint64_t>(model.seed));
    ModelParams fresh = init_params(resolve_tasks(model, ds), rng);
    for (std::size_t i = 0; i < fresh.scores.numel(); ++i)
        CHECK(params.scores.values()[i] == fresh.scores.values()[i]);
}
