#pragma once

#include <functional>
#include <vector>

#include "topkfs/tensor.hpp"

namespace topkfs {

/// Reverse-mode tape. Forward ops append nodes; backward() replays them in
/// exact reverse recording order, propagating adjoints and accumulating the
/// result into the persistent grad buffer of every requires_grad tensor it
/// reaches. A tape represents one forward pass; training rebuilds it every
/// step because the temperature, the subset size, and the noise change.
class Tape {
public:
    using BackwardFn = std::function<void()>;

    void record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

    /// Propagates d(loss)/d(loss) = 1 through the tape. `loss` must be a
    /// scalar produced on this tape. Repeated calls accumulate: calling
    /// twice doubles every gradient.
    void backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn fn;
    };
    std::vector<Node> nodes_;
};

// Differentiable ops. Every op computes eagerly and, when some input
// requires grad, records its backward rule on the tape.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Row-wise softmax, stabilized by subtracting each row's maximum.
Tensor softmax_rows(Tape& tape, const Tensor& x);

// Elementwise ops. add/sub/mul accept equal shapes, or a rank-1 [C] vector
// broadcast against a rank-2 [R x C] matrix (either operand side).
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor relu(Tape& tape, const Tensor& a);
Tensor neg(Tape& tape, const Tensor& a);
Tensor abs_val(Tape& tape, const Tensor& a);  // subgradient 0 at 0
Tensor scale(Tape& tape, const Tensor& a, double c);

Tensor reduce_sum(Tape& tape, const Tensor& x);            // -> rank-0 scalar
Tensor reduce_sum(Tape& tape, const Tensor& x, int axis);  // drops `axis`
Tensor reduce_mean(Tape& tape, const Tensor& x);
Tensor reduce_mean(Tape& tape, const Tensor& x, int axis);

/// Same values in a new shape (copies; gradient flows back through).
Tensor reshape(Tape& tape, const Tensor& x, std::vector<int> shape);

/// Detached view of x: identical values, no gradient path.
Tensor stop_gradient(const Tensor& x);

/// Compares the reverse-mode gradient of scalar-valued f at x against
/// central finite differences with step eps. Returns the maximum relative
/// error, with denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                  const Tensor& x, double eps);

namespace detail {
void check_no_nan(const Tensor& t, const char* where);
}

}  // namespace topkfs
