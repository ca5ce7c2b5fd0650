#include "chestnet/attention.hpp"

#include "chestnet/backbone.hpp"
#include "chestnet/ops.hpp"

namespace chestnet {

std::string_view gradcam_source_name(GradCamSource s) {
    return s == GradCamSource::aux_head ? "aux_head" : "backbone_tap";
}

GradCamSource parse_gradcam_source(std::string_view s) {
    if (s == "aux_head") return GradCamSource::aux_head;
    if (s == "backbone_tap") return GradCamSource::backbone_tap;
    throw ConfigError("unknown gradcam_source '" + std::string(s) + "' (expected aux_head or backbone_tap)");
}

void AttentionConfig::validate() const {
    for (auto c : pre_channels) {
        if (c == 0) throw ConfigError("attention.pre_channels must be positive");
    }
    if (post_mid_channels == 0) throw ConfigError("attention.post_mid_channels must be positive");
    if (map_size == 0) throw ConfigError("attention.map_size must be positive");
    if (aux_loss_weight < 0.0) throw ConfigError("attention.aux_loss_weight must be >= 0");
}

template <typename T>
AttentionBranch<T>::AttentionBranch(const AttentionConfig& config, std::size_t in_channels,
                                    std::size_t num_classes, ParamStore<T>& store, Rng& rng)
    : config_(config), in_channels_(in_channels), num_classes_(num_classes) {
    config_.validate();
    auto conv = [&](const std::string& name, std::size_t cin, std::size_t cout, std::size_t k,
                    std::size_t& w, std::size_t& b) {
        w = store.add("attention." + name + ".weight", Branch::attention,
                      he_normal<T>(Shape{cout, cin, k, k}, cin * k * k, rng));
        b = store.add("attention." + name + ".bias", Branch::attention, Tensor<T>(Shape{cout}));
    };
    const auto& pc = config_.pre_channels;
    conv("pre1", in_channels_, pc[0], 1, pre_w_[0], pre_b_[0]);
    conv("pre2", pc[0], pc[1], 3, pre_w_[1], pre_b_[1]);
    conv("pre3", pc[1], pc[2], 1, pre_w_[2], pre_b_[2]);
    aux_w_ = store.add("attention.aux.weight", Branch::attention,
                       he_normal<T>(Shape{num_classes_, pc[2]}, pc[2], rng));
    aux_b_ = store.add("attention.aux.bias", Branch::attention, Tensor<T>(Shape{num_classes_}));
    conv("post1", num_classes_, num_classes_, 1, post_w_[0], post_b_[0]);
    conv("post2", num_classes_, config_.post_mid_channels, 1, post_w_[1], post_b_[1]);
    conv("post3", config_.post_mid_channels, num_classes_, config_.map_size, post_w_[2], post_b_[2]);
    // The map-sized kernel starts constant over space, i.e. as a global
    // average followed by a linear layer.
    {
        Tensor<T>& w = store.value(post_w_[2]);
        const std::size_t cells = config_.map_size * config_.map_size;
        const Tensor<T> v = he_normal<T>(Shape{num_classes_, config_.post_mid_channels}, config_.post_mid_channels, rng);
        for (std::size_t oi = 0; oi < v.numel(); ++oi) {
            for (std::size_t p = 0; p < cells; ++p) w[oi * cells + p] = v[oi] / static_cast<T>(cells);
        }
    }
}

template <typename T>
Var<T> AttentionBranch<T>::pre_convs(Graph<T>& g, const Var<T>& shared) const {
    const Shape& s = shared.shape();
    if (s.rank() != 4 || s[1] != in_channels_ || s[2] != config_.map_size || s[3] != config_.map_size) {
        throw ShapeError("attention branch expects shared maps [N," + std::to_string(in_channels_) + "," +
                         std::to_string(config_.map_size) + "," + std::to_string(config_.map_size) +
                         "], got " + s.str());
    }
    auto h = ops::relu(ops::conv2d(shared, g.param(pre_w_[0]), g.param(pre_b_[0])));
    h = ops::relu(ops::conv2d(h, g.param(pre_w_[1]), g.param(pre_b_[1]), ops::Conv2dSpec{1, 1}));
    return ops::relu(ops::conv2d(h, g.param(pre_w_[2]), g.param(pre_b_[2])));
}

template <typename T>
Var<T> AttentionBranch<T>::aux_scores(Graph<T>& g, const Var<T>& features) const {
    return ops::linear(ops::global_avg_pool(features), g.param(aux_w_), g.param(aux_b_));
}

template <typename T>
GradCamWeights<T> gradcam_weights(Graph<T>& g, const Var<T>& scores, const Var<T>& target) {
    const Shape& ss = scores.shape();
    const Shape& ts = target.shape();
    if (ss.rank() != 2 || ts.rank() != 4 || ss[0] != ts[0]) {
        throw ShapeError("gradcam: scores " + ss.str() + " incompatible with features " + ts.str());
    }
    const std::size_t n = ss[0], classes = ss[1], k = ts[1], cells = ts[2] * ts[3];
    GradCamWeights<T> out{Tensor<T>(Shape{n, classes, k}), true};
    Tensor<T> seed(ss);
    for (std::size_t c = 0; c < classes; ++c) {
        // Samples are independent, so one sweep with a per-class one-hot
        // cotangent yields every sample's gradient for class c.
        seed.fill(T(0));
        for (std::size_t b = 0; b < n; ++b) seed[b * classes + c] = T(1);
        GradResult<T> r = g.vjp_wrt(scores, seed, target);
        if (!r.reachable) {
            out.reachable = false;
            continue;
        }
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t ch = 0; ch < k; ++ch) {
                const T* plane = r.grad.data() + (b * k + ch) * cells;
                T acc = T(0);
                for (std::size_t j = 0; j < cells; ++j) acc += plane[j];
                out.alpha[(b * classes + c) * k + ch] = acc / T(cells);
            }
        }
    }
    return out;
}

template <typename T>
Var<T> normalize_maps(const Var<T>& raw) {
    return ops::spatial_softmax(raw);
}

template <typename T>
SaliencyMaps<T> AttentionBranch<T>::gradcam(Graph<T>& g, const Var<T>& features, const Var<T>& scores,
                                            GradCamWeights<T>* weights_out) const {
    GradCamWeights<T> w = gradcam_weights(g, scores, features);
    SaliencyMaps<T> maps;
    maps.raw = ops::relu(ops::channel_mix(g.constant(w.alpha), features));
    maps.normalized = normalize_maps(maps.raw);
    if (weights_out != nullptr) *weights_out = std::move(w);
    return maps;
}

template <typename T>
Var<T> AttentionBranch<T>::post_convs(Graph<T>& g, const Var<T>& normalized) const {
    const Shape& s = normalized.shape();
    if (s.rank() != 4 || s[1] != num_classes_ || s[2] != config_.map_size || s[3] != config_.map_size) {
        throw ShapeError("post-convs expect maps [N," + std::to_string(num_classes_) + "," +
                         std::to_string(config_.map_size) + "," + std::to_string(config_.map_size) +
                         "], got " + s.str());
    }
    // The first conv sees each map relative to uniform, h*w*a - 1: zero for
    // a flat map, mostly zero-mean otherwise. The affine shift is absorbed by
    // that conv's weights and bias; it only keeps the optimization well
    // conditioned, since the raw maps are nearly constant at 1/(h*w).
    const auto cells = static_cast<T>(config_.map_size * config_.map_size);
    const auto centred = ops::add(ops::scale(normalized, cells), g.constant(Tensor<T>(s, T(-1))));
    auto h = ops::relu(ops::conv2d(centred, g.param(post_w_[0]), g.param(post_b_[0])));
    h = ops::relu(ops::conv2d(h, g.param(post_w_[1]), g.param(post_b_[1])));
    return ops::flatten(ops::conv2d(h, g.param(post_w_[2]), g.param(post_b_[2])));
}

template <typename T>
AttentionOutput<T> AttentionBranch<T>::forward(Graph<T>& g, const Var<T>& shared,
                                               const Var<T>& backbone_logits) const {
    AttentionOutput<T> out;
    out.features = pre_convs(g, shared);
    out.aux_logits = aux_scores(g, out.features);
    if (config_.gradcam_source == GradCamSource::aux_head) {
        out.maps = gradcam(g, out.features, out.aux_logits, &out.weights);
    } else {
        out.maps = gradcam(g, shared, backbone_logits, &out.weights);
    }
    out.logits = post_convs(g, out.maps.normalized);
    out.y_att = ops::sigmoid(out.logits);
    return out;
}

#define CHESTNET_INSTANTIATE_ATTENTION(T)                                                      \
    template class AttentionBranch<T>;                                                         \
    template GradCamWeights<T> gradcam_weights<T>(Graph<T>&, const Var<T>&, const Var<T>&);    \
    template Var<T> normalize_maps<T>(const Var<T>&);

CHESTNET_INSTANTIATE_ATTENTION(float)
CHESTNET_INSTANTIATE_ATTENTION(double)

#undef CHESTNET_INSTANTIATE_ATTENTION

}  // namespace chestnet
