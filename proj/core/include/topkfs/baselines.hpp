#pragma once

#include <span>
#include <vector>

#include "topkfs/data.hpp"
#include "topkfs/metrics.hpp"
#include "topkfs/model.hpp"
#include "topkfs/trainer.hpp"

namespace topkfs {

/// One-way ANOVA F-statistic of each feature against the class labels
/// (label -1 = excluded). A feature with zero between-group variance scores
/// 0; zero within-group variance with signal is capped at 1e12.
std::vector<double> f_statistic_relevance(const Dataset& ds, std::span<const double> labels);

/// Greedy minimum-redundancy selection: the first pick maximizes the
/// F-statistic relevance; each later pick maximizes
/// relevance(f) - mean_{c in chosen} |pearson(f, c)|. Ties break toward the
/// lowest index.
std::vector<int> mrmr_select(const Dataset& ds, std::span<const double> labels, int k);

/// Trains the encoder/head architecture with a frozen hard mask at
/// `indices` and returns the final test-split metrics.
std::vector<MetricRecord> retrain_fixed_mask(const Dataset& ds, const std::vector<int>& indices,
                                             const ModelConfig& model_config,
                                             const TrainConfig& train_config);

}  // namespace topkfs
