#include "topkfs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace topkfs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::span<const int> pred, std::span<const int> truth, const char* op) {
    if (pred.size() != truth.size())
        throw std::invalid_argument(std::string(op) + ": prediction/truth length mismatch");
}

std::vector<int> class_counts(std::span<const int> truth, int num_classes) {
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int t : truth) {
        if (t < 0 || t >= num_classes)
            throw std::invalid_argument("class label " + std::to_string(t) + " outside [0, " +
                                        std::to_string(num_classes) + ")");
        ++counts[static_cast<std::size_t>(t)];
    }
    return counts;
}

// Midranks of `scores` (average rank within tied groups, 1-based).
std::vector<double> midranks(std::span<const double> scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of ranks i+1..j+1
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double average_precision(std::span<const double> scores, const std::vector<char>& positive,
                         std::size_t n_pos) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    double ap = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0, pp = 0;
    std::size_t i = 0;
    while (i < n) {
        // advance over one group of tied scores; precision/recall are
        // evaluated only at distinct thresholds
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t) {
            ++pp;
            if (positive[order[t]]) ++tp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(pp);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j + 1;
    }
    return ap;
}

}  // namespace

double f1_macro(std::span<const int> pred, std::span<const int> truth, int num_classes) {
    check_lengths(pred, truth, "f1_macro");
    if (truth.empty() || num_classes < 1) return kNaN;
    const std::vector<int> present = class_counts(truth, num_classes);

    double sum = 0.0;
    int considered = 0;
    for (int c = 0; c < num_classes; ++c) {
        if (present[static_cast<std::size_t>(c)] == 0) continue;
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool p = pred[i] == c;
            const bool t = truth[i] == c;
            if (p && t) ++tp;
            else if (p) ++fp;
            else if (t) ++fn;
        }
        double f1 = 0.0;
        if (tp > 0) {
            const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
            f1 = 2.0 * precision * recall / (precision + recall);
        }
        sum += f1;
        ++considered;
    }
    return considered > 0 ? sum / considered : kNaN;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred, truth, "accuracy");
    if (truth.empty()) return kNaN;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double auroc_macro_ovr(std::span<const double> probs, int num_classes,
                       std::span<const int> truth) {
    const std::size_t n = truth.size();
    if (n == 0 || num_classes < 1) return kNaN;
    if (probs.size() != n * static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("auroc_macro_ovr: probs size mismatch");
    const std::vector<int> present = class_counts(truth, num_classes);

    double sum = 0.0;
    int considered = 0;
    std::vector<double> col(n);
    for (int c = 0; c < num_classes; ++c) {
        const std::size_t n_pos = static_cast<std::size_t>(present[static_cast<std::size_t>(c)]);
        const std::size_t n_neg = n - n_pos;
        if (n_pos == 0 || n_neg == 0) continue;  // AUROC undefined for this class
        for (std::size_t i = 0; i < n; ++i)
            col[i] = probs[i * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(c)];
        const std::vector<double> ranks = midranks(col);
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (truth[i] == c) rank_sum += ranks[i];
        const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
        sum += u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        ++considered;
    }
    return considered > 0 ? sum / considered : kNaN;
}

double auprc_macro(std::span<const double> probs, int num_classes, std::span<const int> truth) {
    const std::size_t n = truth.size();
    if (n == 0 || num_classes < 1) return kNaN;
    if (probs.size() != n * static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("auprc_macro: probs size mismatch");
    const std::vector<int> present = class_counts(truth, num_classes);

    double sum = 0.0;
    int considered = 0;
    std::vector<double> col(n);
    std::vector<char> positive(n);
    for (int c = 0; c < num_classes; ++c) {
        const std::size_t n_pos = static_cast<std::size_t>(present[static_cast<std::size_t>(c)]);
        if (n_pos == 0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = probs[i * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(c)];
            positive[i] = truth[i] == c ? 1 : 0;
        }
        sum += average_precision(col, positive, n_pos);
        ++considered;
    }
    return considered > 0 ? sum / considered : kNaN;
}

std::pair<double, double> selection_recovery(const std::vector<int>& selected,
                                             const std::vector<int>& truth) {
    if (selected.empty() || truth.empty()) return {kNaN, kNaN};
    const std::unordered_set<int> truth_set(truth.begin(), truth.end());
    std::size_t hits = 0;
    for (int s : selected)
        if (truth_set.count(s)) ++hits;
    return {static_cast<double>(hits) / static_cast<double>(selected.size()),
            static_cast<double>(hits) / static_cast<double>(truth_set.size())};
}

}  // namespace topkfs
