#include "chestnet/model.hpp"

#include "chestnet/ops.hpp"

namespace chestnet {

void ModelConfig::validate() const {
    backbone.validate();
    attention.validate();
    if (attention.map_size != backbone.shared_size()) {
        throw ConfigError("attention.map_size is " + std::to_string(attention.map_size) +
                          " but the backbone's penultimate stage produces " +
                          std::to_string(backbone.shared_size()) + "x" + std::to_string(backbone.shared_size()) +
                          " maps");
    }
}

std::string_view eval_branch_name(EvalBranch b) {
    switch (b) {
        case EvalBranch::cls: return "cls";
        case EvalBranch::att: return "att";
        case EvalBranch::fused: return "fused";
    }
    return "fused";
}

EvalBranch parse_eval_branch(std::string_view s) {
    if (s == "cls") return EvalBranch::cls;
    if (s == "att") return EvalBranch::att;
    if (s == "fused") return EvalBranch::fused;
    throw ConfigError("unknown branch '" + std::string(s) + "' (expected cls, att or fused)");
}

template <typename T>
const Var<T>& ModelOutput<T>::branch(EvalBranch b) const {
    const Var<T>& v = b == EvalBranch::cls ? y_cls : (b == EvalBranch::att ? y_att : fused);
    if (!v.valid()) throw ContractError("branch output not computed in this forward mode");
    return v;
}

template <typename T>
ChestNet<T>::ChestNet(const ModelConfig& config, std::uint64_t seed) : ChestNet(config, Rng(mix_seed(seed, 0x1417))) {}

template <typename T>
ChestNet<T>::ChestNet(const ModelConfig& config, Rng rng)
    : config_((config.validate(), config)),
      backbone_(config_.backbone, params_, rng),
      attention_(config_.attention, config_.backbone.shared_channels(), config_.backbone.num_classes, params_, rng) {}

template <typename T>
ChestNet<T>::ChestNet(const ModelConfig& config, ParamStore<T> params) : ChestNet(config, std::uint64_t{0}) {
    if (params.size() != params_.size()) {
        throw CheckpointError("parameter count " + std::to_string(params.size()) + " does not match the " +
                              std::to_string(params_.size()) + " the configuration requires");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params.name(i) != params_.name(i) || params.value(i).shape() != params_.value(i).shape()) {
            throw CheckpointError("parameter " + std::to_string(i) + " is " + params.name(i) + " " +
                                  params.value(i).shape().str() + ", expected " + params_.name(i) + " " +
                                  params_.value(i).shape().str());
        }
        params_.value(i) = params.value(i);
    }
}

template <typename T>
Tensor<T> match_input_channels(const Tensor<T>& images, std::size_t channels) {
    if (images.rank() != 4 || images.dim(1) == channels) return images;
    if (images.dim(1) != 1 || channels != 3) {
        throw ShapeError("cannot adapt images " + images.shape().str() + " to " + std::to_string(channels) +
                         " channels");
    }
    const std::size_t n = images.dim(0), plane = images.dim(2) * images.dim(3);
    Tensor<T> out(Shape{n, 3, images.dim(2), images.dim(3)});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < 3; ++c) {
            std::copy_n(images.data() + b * plane, plane, out.data() + (b * 3 + c) * plane);
        }
    }
    return out;
}

template <typename T>
ModelOutput<T> ChestNet<T>::forward(Graph<T>& g, const Tensor<T>& images, ForwardMode mode) const {
    ModelOutput<T> out;
    Var<T> input = g.constant(match_input_channels(images, config_.backbone.input_channels));
    out.backbone = backbone_.forward(g, input);
    out.y_cls = ops::sigmoid(out.backbone.logits);
    if (mode == ForwardMode::classification_only) return out;
    out.attention = attention_.forward(g, out.backbone.shared, out.backbone.logits);
    out.y_att = out.attention->y_att;
    out.fused = ops::average(out.y_cls, out.y_att);
    return out;
}

template <typename T>
std::vector<bool> ChestNet<T>::trainable_mask(int phase) const {
    if (phase < 1 || phase > 3) throw ConfigError("phase must be 1, 2 or 3");
    std::vector<bool> mask(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const bool cls = params_.branch(i) == Branch::classification;
        mask[i] = phase == 3 || (phase == 1 ? cls : !cls);
    }
    return mask;
}

template struct ModelOutput<float>;
template struct ModelOutput<double>;
template class ChestNet<float>;
template class ChestNet<double>;
template Tensor<float> match_input_channels<float>(const Tensor<float>&, std::size_t);
template Tensor<double> match_input_channels<double>(const Tensor<double>&, std::size_t);

}  // namespace chestnet
