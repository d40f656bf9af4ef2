#pragma once

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace topkfs {

/// Per-task evaluation record. Classification fills the four ranking /
/// agreement metrics; regression fills mse. A metric that is undefined on
/// the given split (e.g. AUROC with a single class present) is NaN, which
/// serializes to null in report JSON.
struct MetricRecord {
    std::string task_name;
    double f1_macro = std::numeric_limits<double>::quiet_NaN();
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double auroc_macro_ovr = std::numeric_limits<double>::quiet_NaN();
    double auprc_macro = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
    int evaluated_samples = 0;
};

/// Macro F1 over the classes that appear in `truth`. A class with no true
/// positives and degenerate precision/recall contributes 0; classes absent
/// from `truth` are excluded from the average.
double f1_macro(std::span<const int> pred, std::span<const int> truth, int num_classes);

double accuracy(std::span<const int> pred, std::span<const int> truth);

/// One-vs-rest AUROC per class via midrank Mann-Whitney statistics,
/// macro-averaged over classes present in `truth` that also have at least
/// one negative. `probs` is row-major [n x num_classes].
double auroc_macro_ovr(std::span<const double> probs, int num_classes,
                       std::span<const int> truth);

/// Average precision per class (step-wise sum over the descending-score
/// threshold sweep), macro-averaged over classes present in `truth`.
double auprc_macro(std::span<const double> probs, int num_classes,
                   std::span<const int> truth);

/// (precision, recall) of a selected index set against the ground truth.
std::pair<double, double> selection_recovery(const std::vector<int>& selected,
                                             const std::vector<int>& truth);

}  // namespace topkfs
