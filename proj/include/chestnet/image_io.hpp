#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "chestnet/tensor.hpp"

namespace chestnet {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

/// Decodes any PNG to 8-bit grayscale (colour is luminance-converted, 16-bit
/// is stripped, alpha dropped). Throws DataError.
GrayImage read_png_gray8(const std::filesystem::path& path);
void write_png_gray8(const std::filesystem::path& path, const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// [1,H,W] tensor with values v/255.
Tensor<float> to_tensor(const GrayImage& image);
/// Quantizes a [1,H,W] or [H,W] tensor in [0,1] to 8 bits (round to nearest).
GrayImage to_gray8(const Tensor<float>& image);

/// Corner-aligned bilinear resize of a [C,H,W] tensor to [C,size,size].
/// Identity (bit-exact copy) when the size already matches.
Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t size);

}  // namespace chestnet
