#include "topkfs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace topkfs {

namespace {

constexpr double kFCap = 1e12;

// |pearson correlation| between two feature columns over all rows;
// zero-variance columns correlate 0 by convention.
double abs_pearson(const Dataset& ds, int a, int b) {
    const int n = ds.n;
    double mean_a = 0.0, mean_b = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_a += ds.at(i, a);
        mean_b += ds.at(i, b);
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (int i = 0; i < n; ++i) {
        const double da = ds.at(i, a) - mean_a;
        const double db = ds.at(i, b) - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) return 0.0;
    return std::abs(cov / std::sqrt(var_a * var_b));
}

}  // namespace

std::vector<double> f_statistic_relevance(const Dataset& ds, std::span<const double> labels) {
    if (static_cast<int>(labels.size()) != ds.n)
        throw std::invalid_argument("f_statistic_relevance: label length mismatch");

    std::vector<int> rows;
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < ds.n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == -1.0) continue;
        const int cls = static_cast<int>(std::llround(labels[static_cast<std::size_t>(i)]));
        groups[cls].push_back(i);
        rows.push_back(i);
    }
    const int n = static_cast<int>(rows.size());
    const int g = static_cast<int>(groups.size());
    if (g < 2) throw std::runtime_error("f_statistic_relevance: need at least two classes");
    if (n <= g) throw std::runtime_error("f_statistic_relevance: too few labeled samples");

    std::vector<double> scores(static_cast<std::size_t>(ds.d), 0.0);
    for (int j = 0; j < ds.d; ++j) {
        double grand_mean = 0.0;
        for (int i : rows) grand_mean += ds.at(i, j);
        grand_mean /= n;

        double ssb = 0.0, ssw = 0.0;
        for (const auto& [cls, members] : groups) {
            double mean = 0.0;
            for (int i : members) mean += ds.at(i, j);
            mean /= static_cast<double>(members.size());
            const double dev = mean - grand_mean;
            ssb += static_cast<double>(members.size()) * dev * dev;
            for (int i : members) {
                const double w = ds.at(i, j) - mean;
                ssw += w * w;
            }
        }
        if (ssb == 0.0) {
            scores[static_cast<std::size_t>(j)] = 0.0;
            continue;
        }
        const double msb = ssb / (g - 1);
        const double msw = ssw / (n - g);
        scores[static_cast<std::size_t>(j)] = msw == 0.0 ? kFCap : std::min(msb / msw, kFCap);
    }
    return scores;
}

std::vector<int> mrmr_select(const Dataset& ds, std::span<const double> labels, int k) {
    if (k < 1 || k > ds.d)
        throw std::invalid_argument("mrmr_select: k " + std::to_string(k) + " outside [1, " +
                                    std::to_string(ds.d) + "]");
    const std::vector<double> relevance = f_statistic_relevance(ds, labels);

    std::vector<int> chosen;
    std::vector<char> taken(static_cast<std::size_t>(ds.d), 0);
    std::vector<double> redundancy_sum(static_cast<std::size_t>(ds.d), 0.0);

    int first = 0;
    for (int j = 1; j < ds.d; ++j)
        if (relevance[static_cast<std::size_t>(j)] > relevance[static_cast<std::size_t>(first)])
            first = j;
    chosen.push_back(first);
    taken[static_cast<std::size_t>(first)] = 1;

    while (static_cast<int>(chosen.size()) < k) {
        const int last = chosen.back();
        for (int j = 0; j < ds.d; ++j)
            if (!taken[static_cast<std::size_t>(j)])
                redundancy_sum[static_cast<std::size_t>(j)] += abs_pearson(ds, j, last);

        int best = -1;
        double best_score = 0.0;
        for (int j = 0; j < ds.d; ++j) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            const double score = relevance[static_cast<std::size_t>(j)] -
                                 redundancy_sum[static_cast<std::size_t>(j)] /
                                     static_cast<double>(chosen.size());
            if (best < 0 || score > best_score) {
                best = j;
                best_score = score;
            }
        }
        chosen.push_back(best);
        taken[static_cast<std::size_t>(best)] = 1;
    }
    return chosen;
}

std::vector<MetricRecord> retrain_fixed_mask(const Dataset& ds, const std::vector<int>& indices,
                                             const ModelConfig& model_config,
                                             const TrainConfig& train_config) {
    auto [params, report] = train_fixed_mask(ds, indices, model_config, train_config);
    (void)params;
    return report.final_metrics;
}

}  // namespace topkfs
