#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace topkfs {

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
///
/// Handles are shallow: copying a Tensor shares the underlying storage.
/// Rank-0 tensors (shape {}) hold a single scalar. Gradients live in a
/// persistent `grad` buffer that backward passes accumulate into; the
/// `adjoint` buffer is scratch owned by the Tape during a single sweep.
class Tensor {
public:
    struct Storage {
        std::vector<int> shape;
        std::vector<double> values;
        std::vector<double> grad;     // persistent; empty until first backward
        std::vector<double> adjoint;  // scratch, managed by Tape::backward
        bool requires_grad = false;
    };

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return data_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const { return static_cast<int>(shape().size()); }
    int dim(int axis) const;
    std::size_t numel() const;
    std::string shape_str() const { return shape_to_string(shape()); }

    std::span<const double> values() const;
    std::span<double> mutable_values();

    bool requires_grad() const;
    bool has_grad() const;
    std::span<const double> grad() const;  // empty span when no gradient yet
    void zero_grad();                      // drops any accumulated gradient

    /// Value of a rank-0 or single-element tensor.
    double item() const;
    double at(std::initializer_list<int> idx) const;

    /// Detached copy: same values, requires_grad = false, no history.
    Tensor detach() const;

    /// Internal storage handle, used by the autodiff ops.
    const std::shared_ptr<Storage>& storage() const { return data_; }

private:
    explicit Tensor(std::shared_ptr<Storage> s) : data_(std::move(s)) {}
    std::shared_ptr<Storage> data_;
};

}  // namespace topkfs
