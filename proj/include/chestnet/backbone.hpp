#pragma once

#include <cstddef>
#include <vector>

#include "chestnet/graph.hpp"
#include "chestnet/labels.hpp"
#include "chestnet/params.hpp"
#include "chestnet/rng.hpp"

namespace chestnet {

/// Residual classification backbone. Defaults are the desk-scale instance;
/// the full-scale shape is 224 input, 7x7/2 stem, 3x3/2 pool (pad 1),
/// blocks {3,8,36,3}, channels {256,512,1024,2048}, divisor 4, 14 classes.
struct BackboneConfig {
    std::size_t input_size = 64;
    std::size_t input_channels = 1;
    std::size_t stem_channels = 16;
    std::size_t stem_kernel = 3;
    std::size_t stem_stride = 1;
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;
    std::size_t pool_padding = 0;
    std::vector<std::size_t> stage_blocks{2, 2, 2};
    std::vector<std::size_t> stage_channels{16, 32, 64};
    // Bottleneck width = stage channels / divisor.
    std::size_t bottleneck_divisor = 2;
    std::size_t num_classes = 8;

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
    [[nodiscard]] std::size_t stem_output_size() const;
    /// Spatial extent after stage i.
    [[nodiscard]] std::size_t stage_output_size(std::size_t stage) const;
    /// Extent and width of the penultimate-stage tap.
    [[nodiscard]] std::size_t shared_size() const;
    [[nodiscard]] std::size_t shared_channels() const;
};

/// Parameter indices of one bottleneck block.
struct ResidualBlock {
    std::size_t in_channels = 0;
    std::size_t mid_channels = 0;
    std::size_t out_channels = 0;
    std::size_t stride = 1;
    std::size_t conv1_w = 0, conv1_b = 0;
    std::size_t conv2_w = 0, conv2_b = 0;
    std::size_t conv3_w = 0, conv3_b = 0;
    bool projection = false;
    std::size_t proj_w = 0, proj_b = 0;
};

/// relu(F(x) + shortcut(x)) with F = 1x1 -> relu -> 3x3(stride) -> relu -> 1x1.
template <typename T>
Var<T> residual_block(Graph<T>& g, const Var<T>& x, const ResidualBlock& block);

/// Registers a block's parameters (He-normal weights, zero biases).
template <typename T>
ResidualBlock make_residual_block(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                                  std::size_t mid, std::size_t out, std::size_t stride, Rng& rng);

template <typename T>
struct BackboneOutput {
    Var<T> shared;  // penultimate stage output
    Var<T> logits;  // [N, num_classes]
};

template <typename T>
class Backbone {
public:
    Backbone(const BackboneConfig& config, ParamStore<T>& store, Rng& rng);

    BackboneOutput<T> forward(Graph<T>& g, const Var<T>& image) const;

    [[nodiscard]] const BackboneConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<std::vector<ResidualBlock>>& stages() const { return stages_; }

private:
    BackboneConfig config_;
    std::size_t stem_w_ = 0, stem_b_ = 0;
    std::vector<std::vector<ResidualBlock>> stages_;
    std::size_t head_w_ = 0, head_b_ = 0;
};

/// Elementwise sigmoid of classification logits, tagged y_cls.
template <typename T>
std::vector<LabelVector> classify(const Tensor<T>& logits);

/// He-normal (fan-in) tensor drawn in double precision, then cast.
template <typename T>
Tensor<T> he_normal(Shape shape, std::size_t fan_in, Rng& rng);

extern template class Backbone<float>;
extern template class Backbone<double>;

}  // namespace chestnet
