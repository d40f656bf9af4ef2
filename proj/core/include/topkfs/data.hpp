#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace topkfs {

enum class TaskKind { classification, regression };

enum class Split : std::uint8_t { train = 0, test = 1 };

/// One supervision column. Classification stores class indices as doubles
/// with -1.0 marking a missing label; regression stores values with NaN
/// marking a missing label.
struct LabelColumn {
    std::string name;
    TaskKind kind = TaskKind::classification;
    int num_classes = 0;  // classification only
    std::vector<double> values;
};

struct Dataset {
    int n = 0;
    int d = 0;
    std::vector<double> x;  // row-major n x d
    std::vector<std::string> feature_names;
    std::vector<LabelColumn> labels;
    std::vector<int> ground_truth_features;  // sorted; empty when unknown
    std::vector<Split> split_assignment;     // empty until make_split()

    double at(int row, int col) const { return x[static_cast<std::size_t>(row) * d + col]; }
    std::span<const double> row(int r) const {
        return {x.data() + static_cast<std::size_t>(r) * d, static_cast<std::size_t>(d)};
    }
    std::vector<int> rows_in(Split s) const;
};

struct SynthTask {
    TaskKind kind = TaskKind::classification;
    int num_classes = 2;       // classification only
    double missing_rate = 0.0;
};

enum class Nonlinearity { linear, xor_pairs };

struct SynthSpec {
    int n = 0;
    int d = 0;
    int g = 0;  // informative features per task
    std::vector<SynthTask> tasks;
    double shared_fraction = 1.0;  // overlap of informative sets across tasks
    double noise_sigma = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::linear;
    std::uint64_t seed = 0;
};

/// Standard-normal features with per-task informative index sets of size g.
/// Linear mode draws labels as the argmax of C random linear maps of the
/// informative columns plus noise; xor_pairs makes labels depend on signs
/// of column-pair products, defeating purely linear selectors.
Dataset generate_synthetic(const SynthSpec& spec);

struct LabelColumnSpec {
    std::string name;
    TaskKind kind = TaskKind::classification;
    int num_classes = 0;  // 0 = infer as max label + 1
};

/// Numeric CSV with a header row; all columns not named in `label_columns`
/// are features. Missing label cells are empty or "NA"; unparseable label
/// cells become the missing sentinel. Ragged rows, non-numeric feature
/// cells, and unknown label columns raise errors with row/column
/// coordinates.
Dataset load_csv(const std::string& path, const std::vector<LabelColumnSpec>& label_columns);

/// Writes features then label columns, full-precision (round-trips 64-bit
/// floats exactly). Missing labels are written as "NA".
void save_csv(const Dataset& ds, const std::string& path);

/// Keeps the top_m features by sample variance; surviving columns stay in
/// their original order and ground-truth indices are remapped.
Dataset hvg_filter(const Dataset& ds, int top_m);

/// X' = 1 if X > threshold else 0.
Dataset binarize(const Dataset& ds, double threshold = 0.0);

/// Deterministic shuffled 80/20 split (by count, +-1 row).
Dataset make_split(const Dataset& ds, std::uint64_t seed);

/// Row-filtered copy keeping `rows` in the given order.
Dataset subset_rows(const Dataset& ds, const std::vector<int>& rows);

}  // namespace topkfs
