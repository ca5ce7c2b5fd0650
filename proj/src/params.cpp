#include "chestnet/params.hpp"

namespace chestnet {

std::string_view branch_name(Branch b) {
    return b == Branch::classification ? "classification" : "attention";
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Branch branch, Tensor<T> init) {
    if (find(name)) throw ContractError("duplicate parameter name " + name);
    names_.push_back(std::move(name));
    branches_.push_back(branch);
    values_.push_back(std::move(init));
    return values_.size() - 1;
}

template <typename T>
std::optional<std::size_t> ParamStore<T>::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

template <typename T>
std::size_t ParamStore<T>::total_elements() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.numel();
    return n;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace chestnet
