#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "doctest.h"
#include "topkfs/data.hpp"
#include "topkfs/trainer.hpp"

using namespace topkfs;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

SynthSpec basic_spec() {
    SynthSpec spec;
    spec.n = 60;
    spec.d = 10;
    spec.g = 4;
    spec.tasks = {SynthTask{TaskKind::classification, 3, 0.0}};
    spec.noise_sigma = 0.1;
    spec.seed = 5;
    return spec;
}

}  // namespace

TEST_CASE("generate_synthetic is deterministic per seed") {
    const SynthSpec spec = basic_spec();
    Dataset a = generate_synthetic(spec);
    Dataset b = generate_synthetic(spec);
    CHECK(a.x == b.x);
    CHECK(a.labels[0].values == b.labels[0].values);
    CHECK(a.ground_truth_features == b.ground_truth_features);
    CHECK(static_cast<int>(a.ground_truth_features.size()) == spec.g);
}

TEST_CASE("noise-free linear labels are perfectly predictable") {
    // noise_sigma = 0 and g = d: labels are a deterministic argmax of
    // linear scores, so a linear model can reach training accuracy 1.0
    SynthSpec spec;
    spec.n = 300;
    spec.d = 3;
    spec.g = 3;
    spec.tasks = {SynthTask{TaskKind::classification, 2, 0.0}};
    spec.noise_sigma = 0.0;
    spec.seed = 2;
    Dataset ds = make_split(generate_synthetic(spec), 2);

    ModelConfig model;
    model.d = 3;
    model.k_final = 3;
    model.encoder_layers = {};
    model.latent_dim = 4;
    model.tasks = {TaskSpec{"task0", TaskKind::classification, 2, 1}};
    TrainConfig config;
    config.epochs = 600;
    config.batch_size = 60;
    config.eval_every = 0;
    config.seed = 2;
    config.learning_rate = 0.02;

    auto [params, report] = train(ds, model, config);
    const auto metrics = evaluate(params, ds, Split::train, model.tasks, 3);
    CHECK(metrics[0].accuracy == 1.0);
}

TEST_CASE("generate_synthetic label validity and missing handling") {
    SUBCASE("labels lie in range") {
        Dataset ds = generate_synthetic(basic_spec());
        for (double v : ds.labels[0].values) {
            CHECK(v >= 0.0);
            CHECK(v <= 2.0);
        }
    }
    SUBCASE("missing_rate one blanks the whole column") {
        SynthSpec spec = basic_spec();
        spec.tasks[0].missing_rate = 1.0;
        Dataset ds = generate_synthetic(spec);
        for (double v : ds.labels[0].values) CHECK(v == -1.0);
    }
    SUBCASE("regression column uses NaN sentinels") {
        SynthSpec spec = basic_spec();
        spec.tasks = {SynthTask{TaskKind::regression, 0, 1.0}};
        Dataset ds = generate_synthetic(spec);
        for (double v : ds.labels[0].values) CHECK(std::isnan(v));
    }
    SUBCASE("xor mode needs at least one pair") {
        SynthSpec spec = basic_spec();
        spec.g = 1;
        spec.nonlinearity = Nonlinearity::xor_pairs;
        CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    }
}

TEST_CASE("balanced four-class generator stays near ln 4 entropy") {
    SynthSpec spec;
    spec.n = 100000;
    spec.d = 10;
    spec.g = 8;
    spec.tasks = {SynthTask{TaskKind::classification, 4, 0.0}};
    spec.noise_sigma = 0.5;
    spec.seed = 0;
    Dataset ds = generate_synthetic(spec);

    std::map<int, int> counts;
    for (double v : ds.labels[0].values) counts[static_cast<int>(v)] += 1;
    double entropy = 0.0;
    for (const auto& [cls, count] : counts) {
        const double p = static_cast<double>(count) / spec.n;
        entropy -= p * std::log(p);
    }
    CHECK(std::abs(entropy - std::log(4.0)) < 0.1);
}

TEST_CASE("shared_fraction controls informative-set overlap") {
    SynthSpec spec = basic_spec();
    spec.tasks = {SynthTask{TaskKind::classification, 3, 0.0},
                  SynthTask{TaskKind::classification, 3, 0.0}};
    SUBCASE("full sharing keeps one set") {
        spec.shared_fraction = 1.0;
        Dataset ds = generate_synthetic(spec);
        CHECK(static_cast<int>(ds.ground_truth_features.size()) == spec.g);
    }
    SUBCASE("no sharing doubles the union") {
        spec.shared_fraction = 0.0;
        Dataset ds = generate_synthetic(spec);
        CHECK(static_cast<int>(ds.ground_truth_features.size()) == 2 * spec.g);
    }
}

TEST_CASE("csv round trip is exact") {
    SynthSpec spec = basic_spec();
    spec.tasks.push_back(SynthTask{TaskKind::regression, 0, 0.3});
    spec.tasks[0].missing_rate = 0.2;
    Dataset ds = generate_synthetic(spec);
    const std::string path = temp_path("topkfs_roundtrip.csv");
    save_csv(ds, path);

    Dataset loaded = load_csv(path, {{"task0", TaskKind::classification, 0},
                                     {"task1", TaskKind::regression, 0}});
    std::remove(path.c_str());

    REQUIRE(loaded.n == ds.n);
    REQUIRE(loaded.d == ds.d);
    CHECK(loaded.x == ds.x);
    CHECK(loaded.feature_names == ds.feature_names);
    CHECK(loaded.labels[0].values == ds.labels[0].values);
    for (int i = 0; i < ds.n; ++i) {
        const double a = ds.labels[1].values[static_cast<std::size_t>(i)];
        const double b = loaded.labels[1].values[static_cast<std::size_t>(i)];
        if (std::isnan(a)) CHECK(std::isnan(b));
        else CHECK(a == b);
    }
    CHECK(loaded.labels[0].num_classes == 3);
}

TEST_CASE("load_csv error reporting") {
    const std::string path = temp_path("topkfs_bad.csv");
    SUBCASE("ragged row names the row") {
        std::ofstream(path) << "a,b,y\n1,2,0\n1,2\n";
        CHECK_THROWS_WITH_AS(load_csv(path, {{"y", TaskKind::classification, 0}}),
                             doctest::Contains("row 3"), std::runtime_error);
    }
    SUBCASE("non-numeric feature names row and column") {
        std::ofstream(path) << "a,b,y\n1,oops,0\n";
        CHECK_THROWS_WITH_AS(load_csv(path, {{"y", TaskKind::classification, 0}}),
                             doctest::Contains("column b"), std::runtime_error);
    }
    SUBCASE("unknown label column") {
        std::ofstream(path) << "a,b,y\n1,2,0\n";
        CHECK_THROWS_WITH_AS(load_csv(path, {{"z", TaskKind::classification, 0}}),
                             doctest::Contains("'z'"), std::runtime_error);
    }
    SUBCASE("unparseable label cell becomes the missing sentinel") {
        std::ofstream(path) << "a,b,y\n1,2,?\n3,4,1\n";
        Dataset ds = load_csv(path, {{"y", TaskKind::classification, 0}});
        CHECK(ds.labels[0].values[0] == -1.0);
        CHECK(ds.labels[0].values[1] == 1.0);
    }
    std::remove(path.c_str());
}

TEST_CASE("hvg_filter") {
    Dataset ds;
    ds.n = 4;
    ds.d = 3;
    // column variances: 0, 1, 4 scaled; values chosen directly
    ds.x = {5, 0, 0,
            5, 1, 2,
            5, 2, 4,
            5, 3, 6};
    ds.feature_names = {"const", "mid", "wide"};

    SUBCASE("hand case keeps columns 2 and 1 in stable order") {
        Dataset out = hvg_filter(ds, 2);
        CHECK(out.d == 2);
        CHECK(out.feature_names == std::vector<std::string>{"mid", "wide"});
        CHECK(out.at(1, 0) == 1.0);
        CHECK(out.at(1, 1) == 2.0);
    }
    SUBCASE("constant column is never kept while alternatives exist") {
        Dataset out = hvg_filter(ds, 2);
        for (const std::string& name : out.feature_names) CHECK(name != "const");
    }
    SUBCASE("top_m >= d is the identity") {
        Dataset out = hvg_filter(ds, 3);
        CHECK(out.x == ds.x);
        CHECK(out.feature_names == ds.feature_names);
    }
    SUBCASE("kept variances dominate dropped variances") {
        SynthSpec spec = basic_spec();
        Dataset synth = generate_synthetic(spec);
        Dataset out = hvg_filter(synth, 6);
        auto variance = [&](const Dataset& data, int j) {
            double mean = 0.0;
            for (int i = 0; i < data.n; ++i) mean += data.at(i, j);
            mean /= data.n;
            double ss = 0.0;
            for (int i = 0; i < data.n; ++i) ss += (data.at(i, j) - mean) * (data.at(i, j) - mean);
            return ss / data.n;
        };
        double min_kept = 1e300;
        for (int j = 0; j < out.d; ++j) min_kept = std::min(min_kept, variance(out, j));
        std::vector<char> kept(static_cast<std::size_t>(synth.d), 0);
        for (const std::string& name : out.feature_names)
            for (int j = 0; j < synth.d; ++j)
                if (synth.feature_names[static_cast<std::size_t>(j)] == name)
                    kept[static_cast<std::size_t>(j)] = 1;
        for (int j = 0; j < synth.d; ++j)
            if (!kept[static_cast<std::size_t>(j)]) CHECK(variance(synth, j) <= min_kept);
    }
    SUBCASE("ground truth indices are remapped") {
        Dataset with_truth = ds;
        with_truth.ground_truth_features = {0, 2};
        Dataset out = hvg_filter(with_truth, 2);
        CHECK(out.ground_truth_features == std::vector<int>{1});  // "wide" is now column 1
    }
}

TEST_CASE("binarize") {
    Dataset ds;
    ds.n = 2;
    ds.d = 2;
    ds.x = {0.5, 3.0, -1.0, 0.0};
    ds.feature_names = {"a", "b"};

    SUBCASE("all-positive matrix becomes all ones") {
        Dataset pos = ds;
        pos.x = {1, 2, 3, 4};
        Dataset out = binarize(pos, 0.0);
        for (double v : out.x) CHECK(v == 1.0);
    }
    SUBCASE("mixed signs give the elementwise indicator") {
        Dataset out = binarize(ds, 0.0);
        CHECK(out.x == std::vector<double>{1, 1, 0, 0});
    }
    SUBCASE("idempotent") {
        Dataset once = binarize(ds, 0.0);
        Dataset twice = binarize(once, 0.0);
        CHECK(once.x == twice.x);
    }
}

TEST_CASE("make_split") {
    SynthSpec spec = basic_spec();
    spec.n = 101;
    Dataset ds = generate_synthetic(spec);
    Dataset split_a = make_split(ds, 3);
    Dataset split_b = make_split(ds, 3);
    Dataset split_c = make_split(ds, 4);

    CHECK(split_a.split_assignment == split_b.split_assignment);
    CHECK(split_a.split_assignment != split_c.split_assignment);

    const int n_test = static_cast<int>(split_a.rows_in(Split::test).size());
    const int n_train = static_cast<int>(split_a.rows_in(Split::train).size());
    CHECK(n_test + n_train == 101);
    CHECK(std::abs(n_test - 20) <= 1);
}
