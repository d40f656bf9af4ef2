#include "topkfs/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace topkfs {

namespace detail {

void check_no_nan(const Tensor& t, const char* where) {
#ifndef NDEBUG
    for (double v : t.values()) {
        if (std::isnan(v)) throw std::logic_error(std::string("NaN produced in ") + where);
    }
#else
    (void)t;
    (void)where;
#endif
}

}  // namespace detail

namespace {

using Storage = Tensor::Storage;

bool any_requires_grad(const Tensor& a) { return a.requires_grad(); }
bool any_requires_grad(const Tensor& a, const Tensor& b) {
    return a.requires_grad() || b.requires_grad();
}

// C[n x m] += A[n x k] * B[k x m]
void gemm_acc(const double* A, const double* B, double* C, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * k;
        double* c_row = C + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double a = a_row[p];
            if (a == 0.0) continue;
            const double* b_row = B + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[n x m] += A[n x k] * B[m x k]^T
void gemm_nt_acc(const double* A, const double* B, double* C, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * k;
        double* c_row = C + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* b_row = B + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
            c_row[j] += acc;
        }
    }
}

// C[n x m] += A[k x n]^T * B[k x m]
void gemm_tn_acc(const double* A, const double* B, double* C, int n, int k, int m) {
    for (int p = 0; p < k; ++p) {
        const double* a_row = A + static_cast<std::size_t>(p) * n;
        const double* b_row = B + static_cast<std::size_t>(p) * m;
        for (int i = 0; i < n; ++i) {
            const double a = a_row[i];
            if (a == 0.0) continue;
            double* c_row = C + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) c_row[j] += a * b_row[j];
        }
    }
}

enum class BroadcastKind { none, b_is_row, a_is_row };

BroadcastKind broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return BroadcastKind::none;
    if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) return BroadcastKind::b_is_row;
    if (b.rank() == 2 && a.rank() == 1 && b.dim(1) == a.dim(0)) return BroadcastKind::a_is_row;
    throw std::invalid_argument(std::string(op) + ": shapes " + a.shape_str() + " and " +
                                b.shape_str() + " are not broadcastable");
}

template <typename Fwd>
Tensor binary_elementwise(Tape& tape, const Tensor& a, const Tensor& b, const char* name,
                          Fwd fwd, double da_coeff, double db_coeff) {
    const BroadcastKind bk = broadcast_kind(a, b, name);
    const Tensor& big = (bk == BroadcastKind::a_is_row) ? b : a;
    Tensor out = Tensor::zeros(big.shape(), any_requires_grad(a, b));

    auto av = a.values();
    auto bv = b.values();
    auto ov = out.mutable_values();
    const std::size_t n = ov.size();
    if (bk == BroadcastKind::none) {
        for (std::size_t i = 0; i < n; ++i) ov[i] = fwd(av[i], bv[i]);
    } else {
        const std::size_t cols = (bk == BroadcastKind::b_is_row) ? bv.size() : av.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i % cols;
            ov[i] = (bk == BroadcastKind::b_is_row) ? fwd(av[i], bv[c]) : fwd(av[c], bv[i]);
        }
    }
    detail::check_no_nan(out, name);

    if (!out.requires_grad()) return out;
    // The gradient of add/sub is constant, so the backward rule only needs
    // the coefficients; mul is handled separately.
    tape.record({a, b}, out,
                [as = a.storage(), bs = b.storage(), os = out.storage(), bk, da_coeff, db_coeff] {
                    const auto& g = os->adjoint;
                    if (as->requires_grad) {
                        auto& ga = as->adjoint;
                        if (bk != BroadcastKind::a_is_row) {
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += da_coeff * g[i];
                        } else {
                            const std::size_t cols = ga.size();
                            for (std::size_t i = 0; i < g.size(); ++i)
                                ga[i % cols] += da_coeff * g[i];
                        }
                    }
                    if (bs->requires_grad) {
                        auto& gb = bs->adjoint;
                        if (bk != BroadcastKind::b_is_row) {
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += db_coeff * g[i];
                        } else {
                            const std::size_t cols = gb.size();
                            for (std::size_t i = 0; i < g.size(); ++i)
                                gb[i % cols] += db_coeff * g[i];
                        }
                    }
                });
    return out;
}

template <typename Fwd, typename Dv>
Tensor unary_elementwise(Tape& tape, const Tensor& a, const char* name, Fwd fwd, Dv dv) {
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
    auto av = a.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i]);
    detail::check_no_nan(out, name);

    if (!out.requires_grad()) return out;
    tape.record({a}, out, [as = a.storage(), os = out.storage(), dv] {
        const auto& g = os->adjoint;
        auto& ga = as->adjoint;
        const auto& x = as->values;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += dv(x[i]) * g[i];
    });
    return out;
}

struct AxisSplit {
    std::size_t outer, n, inner;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis, const char* op) {
    if (axis < 0 || axis >= static_cast<int>(shape.size()))
        throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                    " invalid for shape " + shape_to_string(shape));
    AxisSplit s{1, static_cast<std::size_t>(shape[axis]), 1};
    for (int i = 0; i < axis; ++i) s.outer *= static_cast<std::size_t>(shape[i]);
    for (int i = axis + 1; i < static_cast<int>(shape.size()); ++i)
        s.inner *= static_cast<std::size_t>(shape[i]);
    return s;
}

Tensor reduce_axis(Tape& tape, const Tensor& x, int axis, bool mean, const char* name) {
    const AxisSplit sp = split_axis(x.shape(), axis, name);
    std::vector<int> out_shape = x.shape();
    out_shape.erase(out_shape.begin() + axis);
    Tensor out = Tensor::zeros(out_shape, x.requires_grad());

    auto xv = x.values();
    auto ov = out.mutable_values();
    const double denom = mean ? static_cast<double>(sp.n) : 1.0;
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t j = 0; j < sp.n; ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
                ov[o * sp.inner + i] += xv[(o * sp.n + j) * sp.inner + i] / denom;

    if (!out.requires_grad()) return out;
    tape.record({x}, out, [xs = x.storage(), os = out.storage(), sp, denom] {
        const auto& g = os->adjoint;
        auto& gx = xs->adjoint;
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t j = 0; j < sp.n; ++j)
                for (std::size_t i = 0; i < sp.inner; ++i)
                    gx[(o * sp.n + j) * sp.inner + i] += g[o * sp.inner + i] / denom;
    });
    return out;
}

Tensor reduce_all(Tape& tape, const Tensor& x, bool mean) {
    auto xv = x.values();
    double acc = 0.0;
    for (double v : xv) acc += v;
    const double denom = mean ? static_cast<double>(std::max<std::size_t>(xv.size(), 1)) : 1.0;
    Tensor out = Tensor::scalar(acc / denom, x.requires_grad());
    if (!out.requires_grad()) return out;
    tape.record({x}, out, [xs = x.storage(), os = out.storage(), denom] {
        const double g = os->adjoint[0] / denom;
        for (double& v : xs->adjoint) v += g;
    });
    return out;
}

}  // namespace

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw std::logic_error("backward: loss must be a scalar, got " +
                               (loss.defined() ? loss.shape_str() : std::string("undefined")));

    bool produced_here = false;
    std::unordered_set<Storage*> seen;
    std::vector<Storage*> participants;
    auto visit = [&](const Tensor& t) {
        Storage* s = t.storage().get();
        if (s && seen.insert(s).second) participants.push_back(s);
    };
    for (const Node& node : nodes_) {
        for (const Tensor& in : node.inputs) visit(in);
        visit(node.output);
        if (node.output.storage() == loss.storage()) produced_here = true;
    }
    if (!produced_here)
        throw std::logic_error("backward: loss was not produced on this tape");

    for (Storage* s : participants) s->adjoint.assign(s->values.size(), 0.0);
    loss.storage()->adjoint[0] = 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->fn();

    for (Storage* s : participants) {
        if (!s->requires_grad) continue;
        if (s->grad.empty()) s->grad.assign(s->values.size(), 0.0);
        for (std::size_t i = 0; i < s->grad.size(); ++i) s->grad[i] += s->adjoint[i];
#ifndef NDEBUG
        for (double v : s->grad)
            if (std::isnan(v)) throw std::logic_error("NaN gradient after backward");
#endif
    }
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() + " and " +
                                    b.shape_str());
    const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
    Tensor out = Tensor::zeros({n, m}, any_requires_grad(a, b));
    gemm_acc(a.values().data(), b.values().data(), out.mutable_values().data(), n, k, m);
    detail::check_no_nan(out, "matmul");

    if (!out.requires_grad()) return out;
    tape.record({a, b}, out, [as = a.storage(), bs = b.storage(), os = out.storage(), n, k, m] {
        const double* g = os->adjoint.data();
        if (as->requires_grad)
            gemm_nt_acc(g, bs->values.data(), as->adjoint.data(), n, m, k);  // g * b^T
        if (bs->requires_grad)
            gemm_tn_acc(as->values.data(), g, bs->adjoint.data(), k, n, m);  // a^T * g
    });
    return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
    if (x.rank() != 1 && x.rank() != 2)
        throw std::invalid_argument("softmax_rows: expected rank 1 or 2, got " + x.shape_str());
    const int cols = (x.rank() == 2) ? x.dim(1) : x.dim(0);
    const int rows = (x.rank() == 2) ? x.dim(0) : 1;
    if (cols == 0) throw std::invalid_argument("softmax_rows: empty rows in " + x.shape_str());

    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    auto xv = x.values();
    auto ov = out.mutable_values();
    for (int r = 0; r < rows; ++r) {
        const double* row = xv.data() + static_cast<std::size_t>(r) * cols;
        double* orow = ov.data() + static_cast<std::size_t>(r) * cols;
        double mx = row[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double denom = 0.0;
        for (int c = 0; c < cols; ++c) {
            orow[c] = std::exp(row[c] - mx);
            denom += orow[c];
        }
        for (int c = 0; c < cols; ++c) orow[c] /= denom;
    }
    detail::check_no_nan(out, "softmax_rows");

    if (!out.requires_grad()) return out;
    tape.record({x}, out, [xs = x.storage(), os = out.storage(), rows, cols] {
        const auto& g = os->adjoint;
        const auto& y = os->values;
        auto& gx = xs->adjoint;
        for (int r = 0; r < rows; ++r) {
            const std::size_t base = static_cast<std::size_t>(r) * cols;
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += g[base + c] * y[base + c];
            for (int c = 0; c < cols; ++c)
                gx[base + c] += y[base + c] * (g[base + c] - dot);
        }
    });
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary_elementwise(tape, a, b, "add", [](double x, double y) { return x + y; }, 1.0, 1.0);
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary_elementwise(tape, a, b, "sub", [](double x, double y) { return x - y; }, 1.0, -1.0);
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    const BroadcastKind bk = broadcast_kind(a, b, "mul");
    const Tensor& big = (bk == BroadcastKind::a_is_row) ? b : a;
    Tensor out = Tensor::zeros(big.shape(), any_requires_grad(a, b));

    auto av = a.values();
    auto bv = b.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        const double x = (bk == BroadcastKind::a_is_row) ? av[i % av.size()] : av[i];
        const double y = (bk == BroadcastKind::b_is_row) ? bv[i % bv.size()] : bv[i];
        ov[i] = x * y;
    }
    detail::check_no_nan(out, "mul");

    if (!out.requires_grad()) return out;
    tape.record({a, b}, out, [as = a.storage(), bs = b.storage(), os = out.storage(), bk] {
        const auto& g = os->adjoint;
        const auto& xa = as->values;
        const auto& xb = bs->values;
        if (as->requires_grad) {
            auto& ga = as->adjoint;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double y = (bk == BroadcastKind::b_is_row) ? xb[i % xb.size()] : xb[i];
                ga[(bk == BroadcastKind::a_is_row) ? i % xa.size() : i] += g[i] * y;
            }
        }
        if (bs->requires_grad) {
            auto& gb = bs->adjoint;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = (bk == BroadcastKind::a_is_row) ? xa[i % xa.size()] : xa[i];
                gb[(bk == BroadcastKind::b_is_row) ? i % xb.size() : i] += g[i] * x;
            }
        }
    });
    return out;
}

Tensor relu(Tape& tape, const Tensor& a) {
    return unary_elementwise(
        tape, a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor neg(Tape& tape, const Tensor& a) {
    return unary_elementwise(
        tape, a, "neg", [](double x) { return -x; }, [](double) { return -1.0; });
}

Tensor abs_val(Tape& tape, const Tensor& a) {
    return unary_elementwise(
        tape, a, "abs", [](double x) { return std::abs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
    return unary_elementwise(
        tape, a, "scale", [c](double x) { return c * x; }, [c](double) { return c; });
}

Tensor reduce_sum(Tape& tape, const Tensor& x) { return reduce_all(tape, x, false); }
Tensor reduce_mean(Tape& tape, const Tensor& x) { return reduce_all(tape, x, true); }

Tensor reduce_sum(Tape& tape, const Tensor& x, int axis) {
    return reduce_axis(tape, x, axis, false, "reduce_sum");
}

Tensor reduce_mean(Tape& tape, const Tensor& x, int axis) {
    return reduce_axis(tape, x, axis, true, "reduce_mean");
}

Tensor reshape(Tape& tape, const Tensor& x, std::vector<int> shape) {
    if (shape_numel(shape) != x.numel())
        throw std::invalid_argument("reshape: cannot view " + x.shape_str() + " as " +
                                    shape_to_string(shape));
    Tensor out = Tensor::from(std::move(shape),
                              std::vector<double>(x.values().begin(), x.values().end()),
                              x.requires_grad());
    if (!out.requires_grad()) return out;
    tape.record({x}, out, [xs = x.storage(), os = out.storage()] {
        auto& gx = xs->adjoint;
        const auto& g = os->adjoint;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return out;
}

Tensor stop_gradient(const Tensor& x) { return x.detach(); }

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                  double eps) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");

    Tensor probe = Tensor::from(x.shape(), std::vector<double>(x.values().begin(), x.values().end()),
                                true);
    Tape tape;
    Tensor y = f(tape, probe);
    if (y.numel() != 1) throw std::logic_error("grad_check: f must be scalar-valued");
    tape.backward(y);
    std::vector<double> analytic(probe.grad().begin(), probe.grad().end());

    std::vector<double> base(x.values().begin(), x.values().end());
    auto eval = [&](const std::vector<double>& v) {
        Tape scratch;
        Tensor t = Tensor::from(x.shape(), v, false);
        return f(scratch, t).item();
    };

    double max_rel = 0.0;
    std::vector<double> work = base;
    for (std::size_t i = 0; i < base.size(); ++i) {
        work[i] = base[i] + eps;
        const double fp = eval(work);
        work[i] = base[i] - eps;
        const double fm = eval(work);
        work[i] = base[i];
        const double numeric = (fp - fm) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace topkfs
