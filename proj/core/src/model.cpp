#include "topkfs/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace topkfs {

namespace {

using json = nlohmann::ordered_json;

std::vector<int> layer_dims(const ModelConfig& config) {
    std::vector<int> dims{config.d};
    dims.insert(dims.end(), config.encoder_layers.begin(), config.encoder_layers.end());
    dims.push_back(config.latent_dim);
    return dims;
}

int head_width(const TaskSpec& task) {
    return task.kind == TaskKind::classification ? task.num_classes : task.output_dim;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    return add(tape, matmul(tape, x, w), b);
}

}  // namespace

void validate(const ModelConfig& config) {
    if (config.d < 1) throw std::invalid_argument("ModelConfig: d must be >= 1");
    if (config.k_final < 1 || config.k_final > config.d)
        throw std::invalid_argument("ModelConfig: k_final " + std::to_string(config.k_final) +
                                    " outside [1, " + std::to_string(config.d) + "]");
    if (config.latent_dim < 1) throw std::invalid_argument("ModelConfig: latent_dim must be >= 1");
    for (int w : config.encoder_layers)
        if (w < 1) throw std::invalid_argument("ModelConfig: encoder layer width must be >= 1");
    if (config.tasks.empty()) throw std::invalid_argument("ModelConfig: at least one task required");
    for (const TaskSpec& t : config.tasks) {
        if (t.kind == TaskKind::classification && t.num_classes < 2)
            throw std::invalid_argument("ModelConfig: task '" + t.name + "' needs >= 2 classes");
        if (t.kind == TaskKind::regression && t.output_dim < 1)
            throw std::invalid_argument("ModelConfig: task '" + t.name + "' needs output_dim >= 1");
    }
    if (!(config.tau0 > 0.0) || !(config.tau_min > 0.0))
        throw std::invalid_argument("ModelConfig: temperatures must be positive");
    if (config.noise_scale0 < 0.0)
        throw std::invalid_argument("ModelConfig: noise_scale0 must be >= 0");
}

std::vector<Tensor> ModelParams::all() const {
    std::vector<Tensor> out;
    out.push_back(scores);
    for (const Tensor& t : encoder_weights) out.push_back(t);
    for (const Tensor& t : encoder_biases) out.push_back(t);
    for (const Tensor& t : head_weights) out.push_back(t);
    for (const Tensor& t : head_biases) out.push_back(t);
    return out;
}

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    validate(config);
    ModelParams params;

    std::vector<double> scores(static_cast<std::size_t>(config.d));
    for (double& v : scores) v = rng.uniform(-0.01, 0.01);
    params.scores = Tensor::from({config.d}, std::move(scores), true);

    auto init_linear = [&rng](int fan_in, int fan_out, std::vector<Tensor>& ws,
                              std::vector<Tensor>& bs) {
        const double bound = std::sqrt(6.0 / fan_in);
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& v : w) v = rng.uniform(-bound, bound);
        ws.push_back(Tensor::from({fan_in, fan_out}, std::move(w), true));
        bs.push_back(Tensor::zeros({fan_out}, true));
    };

    const std::vector<int> dims = layer_dims(config);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        init_linear(dims[i], dims[i + 1], params.encoder_weights, params.encoder_biases);
    for (const TaskSpec& task : config.tasks)
        init_linear(config.latent_dim, head_width(task), params.head_weights, params.head_biases);
    return params;
}

Tensor apply_mask(Tape& tape, const Tensor& x, const SelectionMask& mask) {
    if (x.rank() != 2 || x.dim(1) != mask.st.dim(0))
        throw std::invalid_argument("apply_mask: width of " + x.shape_str() +
                                    " does not match mask length " +
                                    std::to_string(mask.st.dim(0)));
    return mul(tape, x, mask.st);
}

Tensor encode(Tape& tape, const Tensor& masked, const ModelParams& params) {
    Tensor h = masked;
    const std::size_t n_layers = params.encoder_weights.size();
    for (std::size_t i = 0; i < n_layers; ++i) {
        h = linear(tape, h, params.encoder_weights[i], params.encoder_biases[i]);
        if (i + 1 < n_layers) h = relu(tape, h);
    }
    return h;
}

Tensor predict(Tape& tape, const Tensor& latent, int task_index, const ModelParams& params) {
    if (task_index < 0 || task_index >= static_cast<int>(params.head_weights.size()))
        throw std::invalid_argument("predict: task index " + std::to_string(task_index) +
                                    " out of range");
    return linear(tape, latent, params.head_weights[static_cast<std::size_t>(task_index)],
                  params.head_biases[static_cast<std::size_t>(task_index)]);
}

namespace {

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::span<const double> labels,
                     const TaskSpec& task) {
    const int n = logits.dim(0);
    const int c_num = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("task_loss: label column length " +
                                    std::to_string(labels.size()) + " != batch size " +
                                    std::to_string(n));

    std::vector<int> rows;
    std::vector<int> classes;
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == -1.0) continue;
        const long cls = std::llround(labels[static_cast<std::size_t>(i)]);
        if (cls < 0 || cls >= c_num)
            throw std::runtime_error("task_loss: class label " + std::to_string(cls) +
                                     " outside [0, " + std::to_string(c_num) + ") for task '" +
                                     task.name + "' at row " + std::to_string(i));
        rows.push_back(i);
        classes.push_back(static_cast<int>(cls));
    }
    if (rows.empty()) return Tensor::scalar(0.0);

    auto lv = logits.values();
    const double inv = 1.0 / static_cast<double>(rows.size());
    // softmax probabilities of the labeled rows, saved for the backward rule
    auto probs = std::make_shared<std::vector<double>>(rows.size() * static_cast<std::size_t>(c_num));
    double total = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double* row = lv.data() + static_cast<std::size_t>(rows[r]) * c_num;
        double mx = row[0];
        for (int j = 1; j < c_num; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < c_num; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        total += lse - row[classes[r]];
        for (int j = 0; j < c_num; ++j)
            (*probs)[r * static_cast<std::size_t>(c_num) + static_cast<std::size_t>(j)] =
                std::exp(row[j] - lse);
    }
    Tensor out = Tensor::scalar(total * inv, logits.requires_grad());
    detail::check_no_nan(out, "cross_entropy");

    if (!out.requires_grad()) return out;
    tape.record({logits}, out,
                [ls = logits.storage(), os = out.storage(), rows, classes, probs, c_num, inv] {
                    const double g = os->adjoint[0] * inv;
                    auto& gl = ls->adjoint;
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        double* grow = gl.data() + static_cast<std::size_t>(rows[r]) * c_num;
                        const double* prow = probs->data() + r * static_cast<std::size_t>(c_num);
                        for (int j = 0; j < c_num; ++j) grow[j] += g * prow[j];
                        grow[classes[r]] -= g;
                    }
                });
    return out;
}

Tensor mean_squared_error(Tape& tape, const Tensor& pred, std::span<const double> targets,
                          const TaskSpec& task) {
    const int n = pred.dim(0);
    const int m = pred.dim(1);
    if (static_cast<int>(targets.size()) != n * m)
        throw std::invalid_argument("task_loss: target length " + std::to_string(targets.size()) +
                                    " != prediction size " + std::to_string(n * m) + " for task '" +
                                    task.name + "'");

    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
        bool missing = false;
        for (int j = 0; j < m; ++j)
            if (std::isnan(targets[static_cast<std::size_t>(i) * m + j])) missing = true;
        if (!missing) rows.push_back(i);
    }
    if (rows.empty()) return Tensor::scalar(0.0);

    auto pv = pred.values();
    const double inv = 1.0 / (static_cast<double>(rows.size()) * m);
    double total = 0.0;
    for (int i : rows)
        for (int j = 0; j < m; ++j) {
            const double diff = pv[static_cast<std::size_t>(i) * m + j] -
                                targets[static_cast<std::size_t>(i) * m + j];
            total += diff * diff;
        }
    Tensor out = Tensor::scalar(total * inv, pred.requires_grad());

    if (!out.requires_grad()) return out;
    std::vector<double> target_copy(targets.begin(), targets.end());
    tape.record({pred}, out,
                [ps = pred.storage(), os = out.storage(), rows, t = std::move(target_copy), m, inv] {
                    const double g = os->adjoint[0] * inv;
                    auto& gp = ps->adjoint;
                    for (int i : rows)
                        for (int j = 0; j < m; ++j) {
                            const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                            gp[idx] += g * 2.0 * (ps->values[idx] - t[idx]);
                        }
                });
    return out;
}

}  // namespace

Tensor task_loss(Tape& tape, const Tensor& pred, std::span<const double> labels,
                 const TaskSpec& task) {
    if (pred.rank() != 2) throw std::invalid_argument("task_loss: predictions must be rank 2");
    return task.kind == TaskKind::classification ? cross_entropy(tape, pred, labels, task)
                                                 : mean_squared_error(tape, pred, labels, task);
}

ForwardResult forward_pass(Tape& tape, const Tensor& x, const ModelParams& params,
                           const Tensor& mask, const std::vector<TaskSpec>& tasks) {
    ForwardResult result;
    result.masked = mul(tape, x, mask);
    result.latent = encode(tape, result.masked, params);
    result.preds.reserve(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t)
        result.preds.push_back(predict(tape, result.latent, static_cast<int>(t), params));
    return result;
}

Tensor joint_loss(Tape& tape, const ForwardResult& fwd,
                  const std::vector<std::span<const double>>& labels,
                  const std::vector<TaskSpec>& tasks) {
    if (tasks.empty()) throw std::invalid_argument("joint_loss: at least one task required");
    if (labels.size() != tasks.size() || fwd.preds.size() != tasks.size())
        throw std::invalid_argument("joint_loss: task/label/prediction count mismatch");

    Tensor total;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        Tensor lt = task_loss(tape, fwd.preds[t], labels[t], tasks[t]);
        total = t == 0 ? lt : add(tape, total, lt);
    }
    return scale(tape, total, 1.0 / static_cast<double>(tasks.size()));
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

namespace {

constexpr int kCheckpointVersion = 1;

std::string double_to_hex(double v) {
    char buf[17];
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    static const char* digits = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = digits[(bits >> (60 - 4 * i)) & 0xF];
    buf[16] = '\0';
    return std::string(buf);
}

double hex_to_double(const std::string& s) {
    if (s.size() != 16) throw std::runtime_error("checkpoint: bad hex double '" + s + "'");
    std::uint64_t bits = 0;
    for (char c : s) {
        bits <<= 4;
        if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
        else throw std::runtime_error("checkpoint: bad hex double '" + s + "'");
    }
    return std::bit_cast<double>(bits);
}

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    json data = json::array();
    for (double v : t.values()) data.push_back(double_to_hex(v));
    j["data"] = std::move(data);
    return j;
}

Tensor tensor_from_json(const json& j, bool requires_grad) {
    std::vector<int> shape = j.at("shape").get<std::vector<int>>();
    std::vector<double> values;
    values.reserve(j.at("data").size());
    for (const auto& h : j.at("data")) values.push_back(hex_to_double(h.get<std::string>()));
    return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

json tensor_list_to_json(const std::vector<Tensor>& ts) {
    json arr = json::array();
    for (const Tensor& t : ts) arr.push_back(tensor_to_json(t));
    return arr;
}

std::vector<Tensor> tensor_list_from_json(const json& arr) {
    std::vector<Tensor> out;
    for (const auto& j : arr) out.push_back(tensor_from_json(j, true));
    return out;
}

json config_to_json(const ModelConfig& c) {
    json tasks = json::array();
    for (const TaskSpec& t : c.tasks) {
        tasks.push_back({{"name", t.name},
                         {"kind", t.kind == TaskKind::classification ? "classification" : "regression"},
                         {"num_classes", t.num_classes},
                         {"output_dim", t.output_dim}});
    }
    return json{{"d", c.d},
                {"k_final", c.k_final},
                {"encoder_layers", c.encoder_layers},
                {"latent_dim", c.latent_dim},
                {"tasks", std::move(tasks)},
                {"tau0", c.tau0},
                {"tau_min", c.tau_min},
                {"tau_rate", c.tau_rate},
                {"warmup_steps", c.warmup_steps},
                {"decay_steps", c.decay_steps},
                {"warmup_frac", c.warmup_frac},
                {"decay_frac", c.decay_frac},
                {"noise_scale0", c.noise_scale0},
                {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.d = j.at("d").get<int>();
    c.k_final = j.at("k_final").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<std::vector<int>>();
    c.latent_dim = j.at("latent_dim").get<int>();
    for (const auto& tj : j.at("tasks")) {
        TaskSpec t;
        t.name = tj.at("name").get<std::string>();
        t.kind = tj.at("kind").get<std::string>() == "regression" ? TaskKind::regression
                                                                  : TaskKind::classification;
        t.num_classes = tj.at("num_classes").get<int>();
        t.output_dim = tj.at("output_dim").get<int>();
        c.tasks.push_back(std::move(t));
    }
    c.tau0 = j.at("tau0").get<double>();
    c.tau_min = j.at("tau_min").get<double>();
    c.tau_rate = j.at("tau_rate").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<long>();
    c.decay_steps = j.at("decay_steps").get<long>();
    c.warmup_frac = j.at("warmup_frac").get<double>();
    c.decay_frac = j.at("decay_frac").get<double>();
    c.noise_scale0 = j.at("noise_scale0").get<double>();
    c.seed = j.at("seed").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params) {
    json j;
    j["schema_version"] = kCheckpointVersion;
    j["kind"] = "topkfs-checkpoint";
    j["config"] = config_to_json(config);
    j["params"] = {{"scores", tensor_to_json(params.scores)},
                   {"encoder_weights", tensor_list_to_json(params.encoder_weights)},
                   {"encoder_biases", tensor_list_to_json(params.encoder_biases)},
                   {"head_weights", tensor_list_to_json(params.head_weights)},
                   {"head_biases", tensor_list_to_json(params.head_biases)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json j;
    in >> j;
    if (j.at("kind").get<std::string>() != "topkfs-checkpoint")
        throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint");
    if (j.at("schema_version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported schema_version in " + path);

    ModelConfig config = config_from_json(j.at("config"));
    ModelParams params;
    const json& p = j.at("params");
    params.scores = tensor_from_json(p.at("scores"), true);
    params.encoder_weights = tensor_list_from_json(p.at("encoder_weights"));
    params.encoder_biases = tensor_list_from_json(p.at("encoder_biases"));
    params.head_weights = tensor_list_from_json(p.at("head_weights"));
    params.head_biases = tensor_list_from_json(p.at("head_biases"));
    return {std::move(config), std::move(params)};
}

}  // namespace topkfs
