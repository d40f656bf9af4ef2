#include "topkfs/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <utility>

namespace topkfs {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_to_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    auto s = std::make_shared<Storage>();
    s->values.assign(shape_numel(shape), value);
    s->shape = std::move(shape);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
    auto s = std::make_shared<Storage>();
    s->shape = std::move(shape);
    s->values = std::move(values);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const {
    if (!data_) throw std::logic_error("shape() on undefined tensor");
    return data_->shape;
}

int Tensor::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for " + shape_str());
    return s[axis];
}

std::size_t Tensor::numel() const {
    if (!data_) return 0;
    return data_->values.size();
}

std::span<const double> Tensor::values() const {
    if (!data_) throw std::logic_error("values() on undefined tensor");
    return data_->values;
}

std::span<double> Tensor::mutable_values() {
    if (!data_) throw std::logic_error("mutable_values() on undefined tensor");
    return data_->values;
}

bool Tensor::requires_grad() const { return data_ && data_->requires_grad; }

bool Tensor::has_grad() const { return data_ && !data_->grad.empty(); }

std::span<const double> Tensor::grad() const {
    if (!data_) throw std::logic_error("grad() on undefined tensor");
    return data_->grad;
}

void Tensor::zero_grad() {
    if (data_) data_->grad.clear();
}

double Tensor::item() const {
    if (numel() != 1)
        throw std::logic_error("item() requires a single-element tensor, got " + shape_str());
    return data_->values[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
    const auto& s = shape();
    if (idx.size() != s.size())
        throw std::out_of_range("index rank mismatch for " + shape_str());
    std::size_t flat = 0;
    int axis = 0;
    for (int i : idx) {
        if (i < 0 || i >= s[axis])
            throw std::out_of_range("index out of range for " + shape_str());
        flat = flat * static_cast<std::size_t>(s[axis]) + static_cast<std::size_t>(i);
        ++axis;
    }
    return data_->values[flat];
}

Tensor Tensor::detach() const {
    if (!data_) return Tensor();
    return Tensor::from(data_->shape, data_->values, false);
}

}  // namespace topkfs
