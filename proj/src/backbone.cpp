#include "chestnet/backbone.hpp"

#include <cmath>

#include "chestnet/ops.hpp"

namespace chestnet {

void BackboneConfig::validate() const {
    if (input_size == 0) throw ConfigError("backbone.input_size must be positive");
    if (input_channels != 1 && input_channels != 3) {
        throw ConfigError("backbone.input_channels must be 1 or 3");
    }
    if (num_classes == 0) throw ConfigError("backbone.num_classes must be positive");
    if (stem_channels == 0 || stem_kernel == 0 || stem_stride == 0) {
        throw ConfigError("backbone stem settings must be positive");
    }
    if (pool_window == 0 || pool_stride == 0 || pool_padding >= pool_window) {
        throw ConfigError("backbone pool settings are invalid");
    }
    if (stage_blocks.size() != stage_channels.size()) {
        throw ConfigError("backbone.stage_blocks and stage_channels differ in length");
    }
    if (stage_blocks.size() < 2) {
        throw ConfigError("backbone needs at least two stages so a penultimate tap exists");
    }
    if (bottleneck_divisor == 0) throw ConfigError("backbone.bottleneck_divisor must be positive");
    for (std::size_t i = 0; i < stage_blocks.size(); ++i) {
        if (stage_blocks[i] == 0) throw ConfigError("every stage needs at least one block");
        if (stage_channels[i] < bottleneck_divisor) {
            throw ConfigError("stage channels must be at least bottleneck_divisor");
        }
    }
    const std::size_t padded = input_size + 2 * (stem_kernel / 2);
    if (stem_kernel > padded) throw ConfigError("stem kernel larger than the input");
    const std::size_t stem = (padded - stem_kernel) / stem_stride + 1;
    if (pool_window > stem + 2 * pool_padding) throw ConfigError("pool window larger than the stem output");
    if (shared_size() < 2) {
        throw ConfigError("penultimate stage output is " + std::to_string(shared_size()) +
                          " pixels wide; need at least 2 (increase input_size or drop a stage)");
    }
}

std::size_t BackboneConfig::stem_output_size() const {
    const std::size_t conv = (input_size + 2 * (stem_kernel / 2) - stem_kernel) / stem_stride + 1;
    return (conv + 2 * pool_padding - pool_window) / pool_stride + 1;
}

std::size_t BackboneConfig::stage_output_size(std::size_t stage) const {
    std::size_t s = stem_output_size();
    // Stage 0 keeps the resolution; later stages halve it with a 3x3/2 pad-1 conv.
    for (std::size_t i = 1; i <= stage; ++i) s = (s - 1) / 2 + 1;
    return s;
}

std::size_t BackboneConfig::shared_size() const { return stage_output_size(stage_blocks.size() - 2); }

std::size_t BackboneConfig::shared_channels() const { return stage_channels[stage_channels.size() - 2]; }

template <typename T>
Tensor<T> he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> t(std::move(shape));
    for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
    return t;
}

template <typename T>
ResidualBlock make_residual_block(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                                  std::size_t mid, std::size_t out, std::size_t stride, Rng& rng) {
    ResidualBlock b;
    b.in_channels = in;
    b.mid_channels = mid;
    b.out_channels = out;
    b.stride = stride;
    auto conv = [&](const std::string& name, std::size_t cin, std::size_t cout, std::size_t k,
                    std::size_t& w, std::size_t& bias) {
        w = store.add(prefix + "." + name + ".weight", Branch::classification,
                      he_normal<T>(Shape{cout, cin, k, k}, cin * k * k, rng));
        bias = store.add(prefix + "." + name + ".bias", Branch::classification, Tensor<T>(Shape{cout}));
    };
    conv("conv1", in, mid, 1, b.conv1_w, b.conv1_b);
    conv("conv2", mid, mid, 3, b.conv2_w, b.conv2_b);
    conv("conv3", mid, out, 1, b.conv3_w, b.conv3_b);
    if (in != out || stride != 1) {
        b.projection = true;
        conv("proj", in, out, 1, b.proj_w, b.proj_b);
    }
    return b;
}

template <typename T>
Var<T> residual_block(Graph<T>& g, const Var<T>& x, const ResidualBlock& block) {
    if (x.shape().rank() != 4 || x.shape()[1] != block.in_channels) {
        throw ShapeError("residual block expects " + std::to_string(block.in_channels) +
                         " input channels, got " + x.shape().str());
    }
    auto h = ops::relu(ops::conv2d(x, g.param(block.conv1_w), g.param(block.conv1_b)));
    h = ops::relu(ops::conv2d(h, g.param(block.conv2_w), g.param(block.conv2_b),
                              ops::Conv2dSpec{block.stride, 1}));
    h = ops::conv2d(h, g.param(block.conv3_w), g.param(block.conv3_b));
    Var<T> shortcut = x;
    if (block.projection) {
        shortcut = ops::conv2d(x, g.param(block.proj_w), g.param(block.proj_b), ops::Conv2dSpec{block.stride, 0});
    }
    return ops::relu(ops::add(h, shortcut));
}

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& config, ParamStore<T>& store, Rng& rng) : config_(config) {
    config_.validate();
    const std::size_t k = config_.stem_kernel;
    stem_w_ = store.add("backbone.stem.weight", Branch::classification,
                        he_normal<T>(Shape{config_.stem_channels, config_.input_channels, k, k},
                                     config_.input_channels * k * k, rng));
    stem_b_ = store.add("backbone.stem.bias", Branch::classification, Tensor<T>(Shape{config_.stem_channels}));
    std::size_t in = config_.stem_channels;
    for (std::size_t s = 0; s < config_.stage_blocks.size(); ++s) {
        const std::size_t out = config_.stage_channels[s];
        const std::size_t mid = out / config_.bottleneck_divisor;
        std::vector<ResidualBlock> blocks;
        for (std::size_t b = 0; b < config_.stage_blocks[s]; ++b) {
            const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
            blocks.push_back(make_residual_block(store,
                                                 "backbone.stage" + std::to_string(s) + ".block" + std::to_string(b),
                                                 in, mid, out, stride, rng));
            in = out;
        }
        stages_.push_back(std::move(blocks));
    }
    head_w_ = store.add("backbone.head.weight", Branch::classification,
                        he_normal<T>(Shape{config_.num_classes, in}, in, rng));
    head_b_ = store.add("backbone.head.bias", Branch::classification, Tensor<T>(Shape{config_.num_classes}));
}

template <typename T>
BackboneOutput<T> Backbone<T>::forward(Graph<T>& g, const Var<T>& image) const {
    const Shape& s = image.shape();
    if (s.rank() != 4 || s[1] != config_.input_channels || s[2] != config_.input_size ||
        s[3] != config_.input_size) {
        throw ShapeError("backbone expects images [N," + std::to_string(config_.input_channels) + "," +
                         std::to_string(config_.input_size) + "," + std::to_string(config_.input_size) +
                         "], got " + s.str());
    }
    auto h = ops::relu(ops::conv2d(image, g.param(stem_w_), g.param(stem_b_),
                                   ops::Conv2dSpec{config_.stem_stride, config_.stem_kernel / 2}));
    h = ops::maxpool2d(h, config_.pool_window, config_.pool_stride, config_.pool_padding);
    BackboneOutput<T> out;
    for (std::size_t st = 0; st < stages_.size(); ++st) {
        for (const auto& block : stages_[st]) h = residual_block(g, h, block);
        if (st + 2 == stages_.size()) out.shared = h;
    }
    out.logits = ops::linear(ops::global_avg_pool(h), g.param(head_w_), g.param(head_b_));
    return out;
}

template <typename T>
std::vector<LabelVector> classify(const Tensor<T>& logits) {
    Tensor<T> probs(logits.shape());
    for (std::size_t i = 0; i < logits.numel(); ++i) probs[i] = ops::stable_sigmoid(logits[i]);
    return rows_as_labels(probs, LabelRole::y_cls);
}

#define CHESTNET_INSTANTIATE_BACKBONE(T)                                                              \
    template class Backbone<T>;                                                                       \
    template Tensor<T> he_normal<T>(Shape, std::size_t, Rng&);                                        \
    template ResidualBlock make_residual_block<T>(ParamStore<T>&, const std::string&, std::size_t,    \
                                                  std::size_t, std::size_t, std::size_t, Rng&);       \
    template Var<T> residual_block<T>(Graph<T>&, const Var<T>&, const ResidualBlock&);                \
    template std::vector<LabelVector> classify<T>(const Tensor<T>&);

CHESTNET_INSTANTIATE_BACKBONE(float)
CHESTNET_INSTANTIATE_BACKBONE(double)

#undef CHESTNET_INSTANTIATE_BACKBONE

}  // namespace chestnet
