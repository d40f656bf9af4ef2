#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "topkfs/baselines.hpp"
#include "topkfs/data.hpp"
#include "topkfs/rng.hpp"

using namespace topkfs;

namespace {

Dataset from_columns(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& labels) {
    Dataset ds;
    ds.d = static_cast<int>(columns.size());
    ds.n = static_cast<int>(columns[0].size());
    for (int i = 0; i < ds.n; ++i)
        for (int j = 0; j < ds.d; ++j)
            ds.x.push_back(columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    for (int j = 0; j < ds.d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    LabelColumn col;
    col.name = "y";
    col.kind = TaskKind::classification;
    int max_label = 0;
    for (double v : labels) max_label = std::max(max_label, static_cast<int>(v));
    col.num_classes = max_label + 1;
    col.values = labels;
    ds.labels.push_back(std::move(col));
    return ds;
}

// Tight two-class layout: each class has mean 0 or 1 and exact sample
// variance 1 (sum of squared deviations 9 over n-1 = 9 per class).
std::vector<double> anova_feature() {
    std::vector<double> x;
    const double c = 3.0 / std::sqrt(10.0);  // ten alternating +-c values: ss = 10c^2 = 9
    for (int i = 0; i < 10; ++i) x.push_back(i % 2 == 0 ? c : -c);
    for (int i = 0; i < 10; ++i) x.push_back(1.0 + (i % 2 == 0 ? c : -c));
    return x;
}

}  // namespace

TEST_CASE("f_statistic_relevance") {
    std::vector<double> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(0);
    for (int i = 0; i < 10; ++i) labels.push_back(1);

    SUBCASE("closed-form hand case gives F = 5") {
        Dataset ds = from_columns({anova_feature()}, labels);
        const std::vector<double> f = f_statistic_relevance(ds, ds.labels[0].values);
        // brute-force sums for the same quantity
        double m0 = 0, m1 = 0;
        for (int i = 0; i < 10; ++i) m0 += ds.at(i, 0) / 10.0;
        for (int i = 10; i < 20; ++i) m1 += ds.at(i, 0) / 10.0;
        const double grand = 0.5 * (m0 + m1);
        double ssb = 10 * (m0 - grand) * (m0 - grand) + 10 * (m1 - grand) * (m1 - grand);
        double ssw = 0;
        for (int i = 0; i < 20; ++i) {
            const double mean = i < 10 ? m0 : m1;
            ssw += (ds.at(i, 0) - mean) * (ds.at(i, 0) - mean);
        }
        const double expected = (ssb / 1.0) / (ssw / 18.0);
        CHECK(f[0] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(f[0] == doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("a feature identical across classes scores zero") {
        std::vector<double> same;
        for (int i = 0; i < 20; ++i) same.push_back(i % 2 == 0 ? 0.7 : -0.7);
        Dataset ds = from_columns({same}, labels);
        CHECK(f_statistic_relevance(ds, ds.labels[0].values)[0] == 0.0);
    }
    SUBCASE("zero within-class variance is capped") {
        std::vector<double> exact;
        for (int i = 0; i < 20; ++i) exact.push_back(i < 10 ? 0.0 : 1.0);
        Dataset ds = from_columns({exact}, labels);
        CHECK(f_statistic_relevance(ds, ds.labels[0].values)[0] == 1e12);
    }
    SUBCASE("missing labels are excluded") {
        Dataset ds = from_columns({anova_feature()}, labels);
        std::vector<double> with_missing = ds.labels[0].values;
        // blank one sample per class symmetric positions with equal values
        with_missing[0] = -1.0;
        with_missing[10] = -1.0;
        const std::vector<double> f = f_statistic_relevance(ds, with_missing);
        CHECK(std::isfinite(f[0]));
        CHECK(f[0] > 0.0);
    }
    SUBCASE("invariant to per-feature affine rescaling") {
        Rng rng(55);
        std::vector<double> col(20);
        for (double& v : col) v = rng.uniform(-2.0, 2.0);
        Dataset ds = from_columns({col}, labels);
        std::vector<double> scaled = col;
        for (double& v : scaled) v = -3.7 * v + 11.0;
        Dataset ds2 = from_columns({scaled}, labels);
        CHECK(f_statistic_relevance(ds, ds.labels[0].values)[0] ==
              doctest::Approx(f_statistic_relevance(ds2, ds2.labels[0].values)[0])
                  .epsilon(1e-9));
    }
}

TEST_CASE("mrmr_select") {
    std::vector<double> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(0);
    for (int i = 0; i < 10; ++i) labels.push_back(1);

    SUBCASE("k = 1 picks the relevance argmax") {
        Rng rng(66);
        std::vector<double> weak(20), strong = anova_feature();
        for (std::size_t i = 0; i < weak.size(); ++i) weak[i] = rng.uniform(-1.0, 1.0);
        Dataset ds = from_columns({weak, strong}, labels);
        CHECK(mrmr_select(ds, ds.labels[0].values, 1) == std::vector<int>{1});
    }
    SUBCASE("duplicate informative column is deferred behind the noise column") {
        // Hand-crafted d=3 toy, fully deterministic, 12 samples per class.
        //   x0: alternating +-1 plus a 0.4 class shift -> F = 5.5 * 0.4^2 = 0.88
        //   x1: exact duplicate of x0 -> same F, |corr| = 1
        //   x2: period-4 pattern -> equal class means (F = 0), corr(x2,x0) = 0
        // Greedy: x0 first (tie with x1, lowest index wins); then the noise
        // column scores 0 - 0 = 0 against the duplicate's 0.88 - 1 = -0.12.
        std::vector<double> informative, duplicate, noise;
        std::vector<double> labels24;
        for (int i = 0; i < 24; ++i) {
            const double base = i % 2 == 0 ? 1.0 : -1.0;
            const double cls = i < 12 ? 0.0 : 1.0;
            informative.push_back(base + 0.4 * cls);
            noise.push_back(i % 4 < 2 ? 1.0 : -1.0);
            labels24.push_back(cls);
        }
        duplicate = informative;
        Dataset ds = from_columns({informative, duplicate, noise}, labels24);

        const std::vector<double> rel = f_statistic_relevance(ds, ds.labels[0].values);
        CHECK(rel[0] == doctest::Approx(0.88).epsilon(1e-12));
        CHECK(rel[1] == doctest::Approx(0.88).epsilon(1e-12));
        CHECK(rel[2] == 0.0);

        const std::vector<int> order = mrmr_select(ds, ds.labels[0].values, 3);
        CHECK(order == std::vector<int>{0, 2, 1});
    }
    SUBCASE("no duplicates and exact length") {
        SynthSpec spec;
        spec.n = 80;
        spec.d = 15;
        spec.g = 5;
        spec.tasks = {SynthTask{TaskKind::classification, 3, 0.0}};
        spec.noise_sigma = 0.4;
        spec.seed = 9;
        Dataset ds = generate_synthetic(spec);
        const std::vector<int> sel = mrmr_select(ds, ds.labels[0].values, 10);
        CHECK(sel.size() == 10);
        CHECK(std::set<int>(sel.begin(), sel.end()).size() == 10);
    }
}

TEST_CASE("retrain_fixed_mask trains the matched architecture on frozen indices") {
    SynthSpec spec;
    spec.n = 300;
    spec.d = 10;
    spec.g = 3;
    spec.tasks = {SynthTask{TaskKind::classification, 2, 0.0}};
    spec.noise_sigma = 0.1;
    spec.seed = 31;
    Dataset ds = make_split(generate_synthetic(spec), 31);

    ModelConfig model;
    model.d = 10;
    model.k_final = 3;
    model.encoder_layers = {16};
    model.latent_dim = 8;
    model.tasks = {TaskSpec{"task0", TaskKind::classification, 2, 1}};
    TrainConfig config;
    config.epochs = 60;
    config.batch_size = 48;
    config.eval_every = 0;
    config.seed = 31;

    const std::vector<int> informative = ds.ground_truth_features;
    const std::vector<MetricRecord> metrics = retrain_fixed_mask(ds, informative, model, config);
    REQUIRE(metrics.size() == 1);
    CHECK(metrics[0].accuracy > 0.8);
}
