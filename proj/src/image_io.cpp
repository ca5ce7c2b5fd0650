#include "chestnet/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "chestnet/errors.hpp"

namespace chestnet {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what != nullptr) *what = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

GrayImage read_png_gray8(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open image " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw DataError("not a PNG file: " + path.string());
    }
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (png == nullptr) throw DataError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    GrayImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("cannot decode PNG " + path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != img.width) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG layout in " + path.string());
    }
    img.pixels.resize(img.width * img.height);
    rows.resize(img.height);
    for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.width;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png_gray8(const std::filesystem::path& path, const GrayImage& image) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write image " + path.string());
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (png == nullptr) throw DataError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(image.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("cannot encode PNG " + path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

Tensor<float> to_tensor(const GrayImage& image) {
    Tensor<float> t(Shape{1, image.height, image.width});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
    return t;
}

GrayImage to_gray8(const Tensor<float>& image) {
    const Shape& s = image.shape();
    if (!(s.rank() == 2 || (s.rank() == 3 && s[0] == 1))) {
        throw ShapeError("to_gray8 expects [H,W] or [1,H,W], got " + s.str());
    }
    GrayImage g;
    g.height = s[s.rank() - 2];
    g.width = s[s.rank() - 1];
    g.pixels.resize(image.numel());
    for (std::size_t i = 0; i < image.numel(); ++i) {
        const float v = std::clamp(image[i], 0.0f, 1.0f);
        g.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return g;
}

Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t size) {
    const Shape& s = image.shape();
    if (s.rank() != 3) throw ShapeError("resize_bilinear expects [C,H,W], got " + s.str());
    if (size == 0) throw ShapeError("resize_bilinear: target size must be positive");
    const std::size_t c = s[0], h = s[1], w = s[2];
    if (h == size && w == size) return image;
    Tensor<float> out(Shape{c, size, size});
    // a + (b - a) * t keeps constant regions exact.
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    auto coord = [size](std::size_t i, std::size_t extent) {
        if (size == 1 || extent == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(extent - 1) / static_cast<double>(size - 1);
    };
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* src = image.data() + ch * h * w;
        float* dst = out.data() + ch * size * size;
        for (std::size_t y = 0; y < size; ++y) {
            const double fy = coord(y, h);
            const auto y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, h - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t x = 0; x < size; ++x) {
                const double fx = coord(x, w);
                const auto x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, w - 1);
                const double wx = fx - static_cast<double>(x0);
                const double top = lerp(src[y0 * w + x0], src[y0 * w + x1], wx);
                const double bot = lerp(src[y1 * w + x0], src[y1 * w + x1], wx);
                dst[y * size + x] = static_cast<float>(lerp(top, bot, wy));
            }
        }
    }
    return out;
}

}  // namespace chestnet
