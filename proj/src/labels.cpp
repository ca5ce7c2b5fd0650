#include "chestnet/labels.hpp"

namespace chestnet {

std::string_view label_role_name(LabelRole role) {
    switch (role) {
        case LabelRole::ground_truth: return "ground_truth";
        case LabelRole::y_cls: return "y_cls";
        case LabelRole::y_att: return "y_att";
        case LabelRole::fused: return "fused";
    }
    return "unknown";
}

template <typename T>
std::vector<LabelVector> rows_as_labels(const Tensor<T>& probs, LabelRole role) {
    if (probs.rank() != 2) throw ShapeError("expected [N,C] scores, got " + probs.shape().str());
    const std::size_t n = probs.dim(0), c = probs.dim(1);
    std::vector<LabelVector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].role = role;
        out[i].values.assign(probs.data() + i * c, probs.data() + (i + 1) * c);
    }
    return out;
}

template std::vector<LabelVector> rows_as_labels<float>(const Tensor<float>&, LabelRole);
template std::vector<LabelVector> rows_as_labels<double>(const Tensor<double>&, LabelRole);

}  // namespace chestnet
