#include "topkfs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "topkfs/rng.hpp"

namespace topkfs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> random_subset(std::vector<int> pool, int count, Rng& rng) {
    shuffle(pool, rng);
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view cell, double& out) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
        cells.back().pop_back();
    return cells;
}

}  // namespace

std::vector<int> Dataset::rows_in(Split s) const {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
        if (i < static_cast<int>(split_assignment.size()) && split_assignment[i] == s)
            rows.push_back(i);
    return rows;
}

Dataset generate_synthetic(const SynthSpec& spec) {
    if (spec.n < 1 || spec.d < 1) throw std::invalid_argument("generate_synthetic: need n, d >= 1");
    if (spec.g < 1 || spec.g > spec.d)
        throw std::invalid_argument("generate_synthetic: g outside [1, d]");
    if (spec.tasks.empty()) throw std::invalid_argument("generate_synthetic: no tasks");
    if (spec.shared_fraction < 0.0 || spec.shared_fraction > 1.0)
        throw std::invalid_argument("generate_synthetic: shared_fraction outside [0,1]");
    if (spec.nonlinearity == Nonlinearity::xor_pairs && spec.g < 2)
        throw std::invalid_argument("generate_synthetic: xor_pairs needs g >= 2");

    Rng master(spec.seed);
    Rng rng_x = master.fork();
    Rng rng_sets = master.fork();
    Rng rng_tasks = master.fork();
    Rng rng_missing = master.fork();

    Dataset ds;
    ds.n = spec.n;
    ds.d = spec.d;
    ds.x.resize(static_cast<std::size_t>(spec.n) * spec.d);
    for (double& v : ds.x) v = rng_x.normal();
    ds.feature_names.reserve(static_cast<std::size_t>(spec.d));
    for (int j = 0; j < spec.d; ++j) ds.feature_names.push_back("f" + std::to_string(j));

    // Informative index sets: task 0 gets a random g-subset; later tasks
    // share round(shared_fraction * g) of it and draw the rest elsewhere.
    std::vector<int> all_idx(static_cast<std::size_t>(spec.d));
    std::iota(all_idx.begin(), all_idx.end(), 0);
    const std::vector<int> base_set = random_subset(all_idx, spec.g, rng_sets);

    const int n_shared = static_cast<int>(std::llround(spec.shared_fraction * spec.g));
    std::unordered_set<int> truth_union(base_set.begin(), base_set.end());

    std::vector<std::vector<int>> task_sets;
    for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
        if (t == 0) {
            task_sets.push_back(base_set);
            continue;
        }
        std::vector<int> set(base_set.begin(), base_set.begin() + n_shared);
        std::vector<int> pool;
        std::unordered_set<int> base_lookup(base_set.begin(), base_set.end());
        for (int j = 0; j < spec.d; ++j)
            if (!base_lookup.count(j)) pool.push_back(j);
        const int extra = spec.g - n_shared;
        if (extra > static_cast<int>(pool.size()))
            throw std::invalid_argument("generate_synthetic: not enough features for disjoint sets");
        for (int j : random_subset(pool, extra, rng_sets)) set.push_back(j);
        for (int j : set) truth_union.insert(j);
        task_sets.push_back(std::move(set));
    }
    ds.ground_truth_features.assign(truth_union.begin(), truth_union.end());
    std::sort(ds.ground_truth_features.begin(), ds.ground_truth_features.end());

    for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
        const SynthTask& task = spec.tasks[t];
        const std::vector<int>& informative = task_sets[t];
        LabelColumn col;
        col.name = "task" + std::to_string(t);
        col.kind = task.kind;
        col.values.resize(static_cast<std::size_t>(spec.n));

        if (task.kind == TaskKind::classification) {
            const int c_num = task.num_classes;
            if (c_num < 2) throw std::invalid_argument("generate_synthetic: num_classes < 2");
            col.num_classes = c_num;
            if (spec.nonlinearity == Nonlinearity::linear) {
                std::vector<double> w(static_cast<std::size_t>(c_num) * informative.size());
                for (double& v : w) v = rng_tasks.normal();
                // equalize row norms so no class dominates the argmax
                const double target = std::sqrt(static_cast<double>(informative.size()));
                for (int c = 0; c < c_num; ++c) {
                    double norm = 0.0;
                    for (std::size_t j = 0; j < informative.size(); ++j) {
                        const double v = w[static_cast<std::size_t>(c) * informative.size() + j];
                        norm += v * v;
                    }
                    norm = std::sqrt(norm);
                    if (norm > 0.0)
                        for (std::size_t j = 0; j < informative.size(); ++j)
                            w[static_cast<std::size_t>(c) * informative.size() + j] *=
                                target / norm;
                }
                for (int i = 0; i < spec.n; ++i) {
                    int best = 0;
                    double best_score = -std::numeric_limits<double>::infinity();
                    for (int c = 0; c < c_num; ++c) {
                        double score = 0.0;
                        for (std::size_t j = 0; j < informative.size(); ++j)
                            score += w[static_cast<std::size_t>(c) * informative.size() + j] *
                                     ds.at(i, informative[j]);
                        score += spec.noise_sigma * rng_tasks.normal();
                        if (score > best_score) {
                            best_score = score;
                            best = c;
                        }
                    }
                    col.values[static_cast<std::size_t>(i)] = static_cast<double>(best);
                }
            } else {
                const std::size_t n_pairs = informative.size() / 2;
                for (int i = 0; i < spec.n; ++i) {
                    int bits = 0;
                    for (std::size_t p = 0; p < n_pairs; ++p) {
                        const double prod = ds.at(i, informative[2 * p]) *
                                                ds.at(i, informative[2 * p + 1]) +
                                            spec.noise_sigma * rng_tasks.normal();
                        if (prod > 0.0) ++bits;
                    }
                    col.values[static_cast<std::size_t>(i)] = static_cast<double>(bits % c_num);
                }
            }
        } else {
            std::vector<double> w(informative.size());
            for (double& v : w) v = rng_tasks.normal();
            for (int i = 0; i < spec.n; ++i) {
                double y = 0.0;
                for (std::size_t j = 0; j < informative.size(); ++j)
                    y += w[j] * ds.at(i, informative[j]);
                col.values[static_cast<std::size_t>(i)] = y + spec.noise_sigma * rng_tasks.normal();
            }
        }

        if (task.missing_rate > 0.0) {
            const double sentinel = task.kind == TaskKind::classification ? -1.0 : kNaN;
            for (double& v : col.values)
                if (rng_missing.uniform01() < task.missing_rate) v = sentinel;
        }
        ds.labels.push_back(std::move(col));
    }
    return ds;
}

Dataset load_csv(const std::string& path, const std::vector<LabelColumnSpec>& label_columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: " + path + " is empty");
    const std::vector<std::string> header = split_line(line);

    std::unordered_map<std::string, const LabelColumnSpec*> wanted;
    for (const auto& spec : label_columns) wanted[spec.name] = &spec;

    std::vector<int> feature_cols;
    std::vector<int> label_cols;
    Dataset ds;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        auto it = wanted.find(header[static_cast<std::size_t>(c)]);
        if (it != wanted.end()) {
            label_cols.push_back(c);
            LabelColumn col;
            col.name = it->second->name;
            col.kind = it->second->kind;
            col.num_classes = it->second->num_classes;
            ds.labels.push_back(std::move(col));
            wanted.erase(it);
        } else {
            feature_cols.push_back(c);
            ds.feature_names.push_back(header[static_cast<std::size_t>(c)]);
        }
    }
    if (!wanted.empty())
        throw std::runtime_error("load_csv: label column '" + wanted.begin()->first +
                                 "' not found in " + path);

    ds.d = static_cast<int>(feature_cols.size());
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(row + 2) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            double v;
            const std::string& cell = cells[static_cast<std::size_t>(feature_cols[f])];
            if (!parse_double(cell, v))
                throw std::runtime_error("load_csv: non-numeric feature cell '" + cell +
                                         "' at row " + std::to_string(row + 2) + ", column " +
                                         ds.feature_names[f]);
            ds.x.push_back(v);
        }
        for (std::size_t l = 0; l < label_cols.size(); ++l) {
            const std::string& cell = cells[static_cast<std::size_t>(label_cols[l])];
            LabelColumn& col = ds.labels[l];
            double v;
            if (cell.empty() || cell == "NA" || !parse_double(cell, v)) {
                col.values.push_back(col.kind == TaskKind::classification ? -1.0 : kNaN);
            } else {
                col.values.push_back(v);
            }
        }
        ++row;
    }
    ds.n = row;

    for (LabelColumn& col : ds.labels) {
        if (col.kind != TaskKind::classification) continue;
        int max_label = -1;
        for (double v : col.values) {
            if (v == -1.0) continue;
            const long c = std::llround(v);
            if (c < 0 || static_cast<double>(c) != v)
                throw std::runtime_error("load_csv: invalid class label " + format_double(v) +
                                         " in column " + col.name);
            max_label = std::max(max_label, static_cast<int>(c));
        }
        if (col.num_classes == 0) col.num_classes = max_label + 1;
        if (max_label >= col.num_classes)
            throw std::runtime_error("load_csv: class label " + std::to_string(max_label) +
                                     " exceeds num_classes " + std::to_string(col.num_classes) +
                                     " in column " + col.name);
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot write " + path);

    for (int j = 0; j < ds.d; ++j) {
        if (j) out << ',';
        out << ds.feature_names[static_cast<std::size_t>(j)];
    }
    for (const LabelColumn& col : ds.labels) out << ',' << col.name;
    out << '\n';

    for (int i = 0; i < ds.n; ++i) {
        for (int j = 0; j < ds.d; ++j) {
            if (j) out << ',';
            out << format_double(ds.at(i, j));
        }
        for (const LabelColumn& col : ds.labels) {
            out << ',';
            const double v = col.values[static_cast<std::size_t>(i)];
            const bool missing =
                col.kind == TaskKind::classification ? v == -1.0 : std::isnan(v);
            if (missing) {
                out << "NA";
            } else if (col.kind == TaskKind::classification) {
                out << static_cast<long>(std::llround(v));
            } else {
                out << format_double(v);
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

Dataset hvg_filter(const Dataset& ds, int top_m) {
    if (top_m < 1) throw std::invalid_argument("hvg_filter: top_m must be >= 1");
    if (top_m >= ds.d) return ds;

    std::vector<double> variance(static_cast<std::size_t>(ds.d), 0.0);
    for (int j = 0; j < ds.d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < ds.n; ++i) mean += ds.at(i, j);
        mean /= ds.n;
        double ss = 0.0;
        for (int i = 0; i < ds.n; ++i) {
            const double dev = ds.at(i, j) - mean;
            ss += dev * dev;
        }
        variance[static_cast<std::size_t>(j)] = ss / ds.n;
    }

    std::vector<int> order(static_cast<std::size_t>(ds.d));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (variance[static_cast<std::size_t>(a)] != variance[static_cast<std::size_t>(b)])
            return variance[static_cast<std::size_t>(a)] > variance[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::vector<int> keep(order.begin(), order.begin() + top_m);
    std::sort(keep.begin(), keep.end());

    Dataset out;
    out.n = ds.n;
    out.d = top_m;
    out.labels = ds.labels;
    out.split_assignment = ds.split_assignment;
    out.x.reserve(static_cast<std::size_t>(ds.n) * top_m);
    for (int i = 0; i < ds.n; ++i)
        for (int j : keep) out.x.push_back(ds.at(i, j));
    std::unordered_map<int, int> remap;
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(keep[j])]);
        remap[keep[j]] = static_cast<int>(j);
    }
    for (int t : ds.ground_truth_features) {
        auto it = remap.find(t);
        if (it != remap.end()) out.ground_truth_features.push_back(it->second);
    }
    return out;
}

Dataset binarize(const Dataset& ds, double threshold) {
    Dataset out = ds;
    for (double& v : out.x) v = v > threshold ? 1.0 : 0.0;
    return out;
}

Dataset subset_rows(const Dataset& ds, const std::vector<int>& rows) {
    Dataset out;
    out.n = static_cast<int>(rows.size());
    out.d = ds.d;
    out.feature_names = ds.feature_names;
    out.ground_truth_features = ds.ground_truth_features;
    out.x.reserve(rows.size() * static_cast<std::size_t>(ds.d));
    for (int r : rows) {
        if (r < 0 || r >= ds.n)
            throw std::out_of_range("subset_rows: row " + std::to_string(r) + " outside [0, " +
                                    std::to_string(ds.n) + ")");
        auto row = ds.row(r);
        out.x.insert(out.x.end(), row.begin(), row.end());
    }
    for (const LabelColumn& col : ds.labels) {
        LabelColumn copy;
        copy.name = col.name;
        copy.kind = col.kind;
        copy.num_classes = col.num_classes;
        for (int r : rows) copy.values.push_back(col.values[static_cast<std::size_t>(r)]);
        out.labels.push_back(std::move(copy));
    }
    if (!ds.split_assignment.empty())
        for (int r : rows) out.split_assignment.push_back(ds.split_assignment[static_cast<std::size_t>(r)]);
    return out;
}

Dataset make_split(const Dataset& ds, std::uint64_t seed) {
    Dataset out = ds;
    const int n_test = static_cast<int>(std::llround(0.2 * ds.n));
    std::vector<int> idx(static_cast<std::size_t>(ds.n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    shuffle(idx, rng);
    out.split_assignment.assign(static_cast<std::size_t>(ds.n), Split::train);
    for (int i = 0; i < n_test; ++i)
        out.split_assignment[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] =
            Split::test;
    return out;
}

}  // namespace topkfs
