#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chestnet/tensor.hpp"

namespace chestnet {

/// Which branch of the dual-branch model owns a parameter. Drives phase freezing.
enum class Branch { classification, attention };

std::string_view branch_name(Branch b);

/// Ordered, named parameter set. Order is the checkpoint manifest order.
template <typename T>
class ParamStore {
public:
    std::size_t add(std::string name, Branch branch, Tensor<T> init);

    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] const std::string& name(std::size_t i) const { return names_.at(i); }
    [[nodiscard]] Branch branch(std::size_t i) const { return branches_.at(i); }
    [[nodiscard]] const Tensor<T>& value(std::size_t i) const { return values_.at(i); }
    [[nodiscard]] Tensor<T>& value(std::size_t i) { return values_.at(i); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const;
    [[nodiscard]] std::size_t total_elements() const;

    template <typename U>
    [[nodiscard]] ParamStore<U> cast() const {
        ParamStore<U> out;
        for (std::size_t i = 0; i < size(); ++i) {
            out.add(names_[i], branches_[i], values_[i].template cast<U>());
        }
        return out;
    }

private:
    std::vector<std::string> names_;
    std::vector<Branch> branches_;
    std::vector<Tensor<T>> values_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace chestnet
