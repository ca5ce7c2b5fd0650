#include "chestnet/tensor.hpp"

#include <cmath>
#include <sstream>

#include "chestnet/kernels.hpp"

namespace chestnet {

std::size_t Shape::numel() const {
    std::size_t n = 1;
    for (auto d : dims_) n *= d;
    return n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) os << ',';
        os << dims_[i];
    }
    os << ']';
    return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.numel() != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
    }
}

template <typename T>
T& Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

template <typename T>
const T& Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
    if (shape.numel() != numel()) {
        throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    return Tensor(std::move(shape), data_);
}

template <typename T>
T Tensor<T>::item() const {
    if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_.str());
    return data_[0];
}

template <typename T>
bool Tensor<T>::all_finite() const {
    for (auto v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
void Tensor<T>::fill(T v) {
    std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
void Tensor<T>::add_(const Tensor& other) {
    if (other.shape_ != shape_) {
        throw ShapeError("add_: " + shape_.str() + " vs " + other.shape_.str());
    }
    kernels::active<T>().axpy(data_.size(), T(1), other.data(), data_.data());
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace chestnet
