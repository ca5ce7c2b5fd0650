#pragma once

#include <cstdint>
#include <optional>

#include "chestnet/attention.hpp"
#include "chestnet/backbone.hpp"

namespace chestnet {

struct ModelConfig {
    BackboneConfig backbone;
    AttentionConfig attention;

    /// Validates both halves and their coupling (attention map size must equal
    /// the backbone's penultimate extent).
    void validate() const;
};

/// Which parts of the network a forward pass evaluates.
enum class ForwardMode {
    classification_only,  // backbone + sigmoid head
    full,                 // both branches and the fused prediction
};

/// Evaluation branch for reporting.
enum class EvalBranch { cls, att, fused };

std::string_view eval_branch_name(EvalBranch b);
EvalBranch parse_eval_branch(std::string_view s);

template <typename T>
struct ModelOutput {
    BackboneOutput<T> backbone;
    std::optional<AttentionOutput<T>> attention;
    Var<T> y_cls;
    Var<T> y_att;  // invalid in classification_only mode
    Var<T> fused;  // invalid in classification_only mode

    [[nodiscard]] const Var<T>& branch(EvalBranch b) const;
};

/// Dual-branch classifier: residual backbone producing y_cls plus the
/// Grad-CAM attention branch producing y_att; the diagnosis uses their mean.
template <typename T>
class ChestNet {
public:
    /// Fresh model, parameters drawn from `seed`.
    ChestNet(const ModelConfig& config, std::uint64_t seed);
    /// Model over an existing parameter set; names and shapes must match the
    /// architecture implied by `config`.
    ChestNet(const ModelConfig& config, ParamStore<T> params);

    ChestNet(const ChestNet&) = delete;
    ChestNet& operator=(const ChestNet&) = delete;

    ModelOutput<T> forward(Graph<T>& g, const Tensor<T>& images, ForwardMode mode) const;

    /// Parameters updated in training phase 1, 2 or 3.
    [[nodiscard]] std::vector<bool> trainable_mask(int phase) const;

    [[nodiscard]] const ModelConfig& config() const { return config_; }
    [[nodiscard]] ParamStore<T>& params() { return params_; }
    [[nodiscard]] const ParamStore<T>& params() const { return params_; }
    [[nodiscard]] const Backbone<T>& backbone() const { return backbone_; }
    [[nodiscard]] const AttentionBranch<T>& attention() const { return attention_; }

private:
    ChestNet(const ModelConfig& config, Rng rng);

    ModelConfig config_;
    ParamStore<T> params_;
    Backbone<T> backbone_;
    AttentionBranch<T> attention_;
};

/// Replicates a single grayscale channel when the backbone expects three.
template <typename T>
Tensor<T> match_input_channels(const Tensor<T>& images, std::size_t channels);

extern template class ChestNet<float>;
extern template class ChestNet<double>;

}  // namespace chestnet
