#pragma once

#include <string_view>
#include <vector>

#include "chestnet/tensor.hpp"

namespace chestnet {

enum class LabelRole { ground_truth, y_cls, y_att, fused };

std::string_view label_role_name(LabelRole role);

/// Per-class scores or targets in [0,1].
struct LabelVector {
    std::vector<double> values;
    LabelRole role = LabelRole::ground_truth;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Rows of an [N,C] probability tensor as label vectors with the given role.
template <typename T>
std::vector<LabelVector> rows_as_labels(const Tensor<T>& probs, LabelRole role);

}  // namespace chestnet
