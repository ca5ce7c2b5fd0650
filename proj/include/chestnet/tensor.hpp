#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "chestnet/errors.hpp"

namespace chestnet {

/// Row-major extents of a tensor.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

    [[nodiscard]] std::size_t rank() const { return dims_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t i) const { return dims_.at(i); }
    [[nodiscard]] std::size_t numel() const;
    [[nodiscard]] const std::vector<std::size_t>& dims() const { return dims_; }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
};

/// Dense N-dimensional array of T. Plain value type; graph membership lives in Graph/Var.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0));
    Tensor(Shape shape, std::vector<T> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t numel() const { return data_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t i) const { return shape_[i]; }
    [[nodiscard]] std::size_t rank() const { return shape_.rank(); }

    [[nodiscard]] std::span<T> span() { return data_; }
    [[nodiscard]] std::span<const T> span() const { return data_; }
    [[nodiscard]] T* data() { return data_.data(); }
    [[nodiscard]] const T* data() const { return data_.data(); }
    [[nodiscard]] std::vector<T>& storage() { return data_; }
    [[nodiscard]] const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

    /// Same data, new extents; numel must match.
    [[nodiscard]] Tensor reshaped(Shape shape) const;
    [[nodiscard]] T item() const;
    [[nodiscard]] bool all_finite() const;

    void fill(T v);
    /// this += other (same shape).
    void add_(const Tensor& other);

    template <typename U>
    [[nodiscard]] Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace chestnet
