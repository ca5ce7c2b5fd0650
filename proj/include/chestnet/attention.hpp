#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "chestnet/graph.hpp"
#include "chestnet/params.hpp"
#include "chestnet/rng.hpp"

namespace chestnet {

/// Which differentiable score the Grad-CAM weights are taken from.
enum class GradCamSource {
    // GAP + linear head on the pre-conv output; alpha has a closed form.
    aux_head,
    // Classification logits w.r.t. the shared backbone tap; maps are built
    // from the tap itself and the pre-convs are bypassed.
    backbone_tap,
};

std::string_view gradcam_source_name(GradCamSource s);
GradCamSource parse_gradcam_source(std::string_view s);

struct AttentionConfig {
    std::array<std::size_t, 3> pre_channels{64, 64, 64};
    std::size_t post_mid_channels = 128;
    // Spatial extent of the shared tap; the last post-conv kernel spans it.
    std::size_t map_size = 16;
    GradCamSource gradcam_source = GradCamSource::aux_head;
    // Weight of the auxiliary head's own BCE term.
    double aux_loss_weight = 0.0;

    void validate() const;
};

template <typename T>
struct SaliencyMaps {
    Var<T> raw;         // ReLU(sum_k alpha_ck * A_k), [N,C,h,w]
    Var<T> normalized;  // per-map spatial softmax of raw
};

template <typename T>
struct GradCamWeights {
    Tensor<T> alpha;  // [N,C,K]
    // False when the score did not depend on the features (maps are then zero).
    bool reachable = true;
};

template <typename T>
struct AttentionOutput {
    Var<T> features;    // pre-conv output, [N,K,h,w]
    Var<T> aux_logits;  // [N,C]
    GradCamWeights<T> weights;
    SaliencyMaps<T> maps;
    Var<T> logits;      // [N,C] before the final sigmoid
    Var<T> y_att;       // [N,C]
};

/// Six-convolution attention branch: three pre-convs, Grad-CAM weighting,
/// spatial softmax, three post-convs ending in a sigmoid.
template <typename T>
class AttentionBranch {
public:
    AttentionBranch(const AttentionConfig& config, std::size_t in_channels, std::size_t num_classes,
                    ParamStore<T>& store, Rng& rng);

    /// `backbone_logits` is only consulted for GradCamSource::backbone_tap.
    AttentionOutput<T> forward(Graph<T>& g, const Var<T>& shared, const Var<T>& backbone_logits) const;

    Var<T> pre_convs(Graph<T>& g, const Var<T>& shared) const;
    Var<T> aux_scores(Graph<T>& g, const Var<T>& features) const;
    /// Raw class maps from features and a score differentiable w.r.t. them.
    /// Alpha enters the graph as a constant.
    SaliencyMaps<T> gradcam(Graph<T>& g, const Var<T>& features, const Var<T>& scores,
                            GradCamWeights<T>* weights_out = nullptr) const;
    Var<T> post_convs(Graph<T>& g, const Var<T>& normalized) const;

    [[nodiscard]] const AttentionConfig& config() const { return config_; }
    [[nodiscard]] std::size_t aux_weight_index() const { return aux_w_; }
    [[nodiscard]] std::size_t aux_bias_index() const { return aux_b_; }

private:
    AttentionConfig config_;
    std::size_t in_channels_;
    std::size_t num_classes_;
    std::array<std::size_t, 3> pre_w_{}, pre_b_{};
    std::size_t aux_w_ = 0, aux_b_ = 0;
    std::array<std::size_t, 3> post_w_{}, post_b_{};
};

/// alpha[n,c,k] = spatial mean of d(scores[n,c]) / d(target[n,k,:,:]).
template <typename T>
GradCamWeights<T> gradcam_weights(Graph<T>& g, const Var<T>& scores, const Var<T>& target);

/// Spatial softmax applied to each (n,c) map.
template <typename T>
Var<T> normalize_maps(const Var<T>& raw);

extern template class AttentionBranch<float>;
extern template class AttentionBranch<double>;

}  // namespace chestnet
