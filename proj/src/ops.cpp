#include "chestnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chestnet/kernels.hpp"

namespace chestnet::ops {
namespace {

template <typename T>
using Inputs = std::span<const Tensor<T>* const>;

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
    if (s.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                         ", got " + s.str());
    }
}

void require_same(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

struct ConvGeometry {
    std::size_t n, c, h, w;
    std::size_t k, kh, kw;
    std::size_t stride, pad;
    std::size_t oh, ow;

    [[nodiscard]] bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
    [[nodiscard]] std::size_t patch() const { return c * kh * kw; }
    [[nodiscard]] std::size_t out_cells() const { return oh * ow; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& wt, const Shape& bias, Conv2dSpec spec) {
    require_rank(in, 4, "conv2d", "input");
    require_rank(wt, 4, "conv2d", "weight");
    if (in[1] != wt[1]) {
        throw ShapeError("conv2d: input channels of " + in.str() + " do not match weight " + wt.str());
    }
    if (bias.rank() != 1 || bias[0] != wt[0]) {
        throw ShapeError("conv2d: bias " + bias.str() + " does not match weight " + wt.str());
    }
    if (spec.stride == 0) throw ShapeError("conv2d: stride must be >= 1");
    const std::size_t ph = in[2] + 2 * spec.padding;
    const std::size_t pw = in[3] + 2 * spec.padding;
    if (wt[2] > ph || wt[3] > pw) {
        throw ShapeError("conv2d: kernel " + wt.str() + " larger than padded input " + in.str());
    }
    return {in[0], in[1], in[2], in[3], wt[0], wt[2], wt[3], spec.stride, spec.padding,
            (ph - wt[2]) / spec.stride + 1, (pw - wt[3]) / spec.stride + 1};
}

template <typename T>
void im2col(const ConvGeometry& g, const T* src, T* cols) {
    const std::size_t cells = g.out_cells();
    for (std::size_t c = 0; c < g.c; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                T* row = cols + ((c * g.kh + i) * g.kw + j) * cells;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                   static_cast<std::ptrdiff_t>(g.pad);
                    T* dst = row + oy * g.ow;
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) {
                        std::fill(dst, dst + g.ow, T(0));
                        continue;
                    }
                    const T* srow = src + (c * g.h + static_cast<std::size_t>(y)) * g.w;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                       static_cast<std::ptrdiff_t>(g.pad);
                        dst[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(g.w))
                                      ? T(0)
                                      : srow[static_cast<std::size_t>(x)];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* dst) {
    const std::size_t cells = g.out_cells();
    for (std::size_t c = 0; c < g.c; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                const T* row = cols + ((c * g.kh + i) * g.kw + j) * cells;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                   static_cast<std::ptrdiff_t>(g.pad);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    T* drow = dst + (c * g.h + static_cast<std::size_t>(y)) * g.w;
                    const T* srow = row + oy * g.ow;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                       static_cast<std::ptrdiff_t>(g.pad);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.w)) continue;
                        drow[static_cast<std::size_t>(x)] += srow[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
Tensor<T> conv_forward(const ConvGeometry& g, const Tensor<T>& in, const Tensor<T>& wt,
                       const Tensor<T>& bias) {
    const auto& k = kernels::active<T>();
    Tensor<T> out(Shape{g.n, g.k, g.oh, g.ow});
    const std::size_t cells = g.out_cells();
    std::vector<T> cols(g.pointwise() ? 0 : g.patch() * cells);
    for (std::size_t n = 0; n < g.n; ++n) {
        const T* src = in.data() + n * g.c * g.h * g.w;
        const T* colp = src;
        if (!g.pointwise()) {
            im2col(g, src, cols.data());
            colp = cols.data();
        }
        T* dst = out.data() + n * g.k * cells;
        for (std::size_t kk = 0; kk < g.k; ++kk) std::fill(dst + kk * cells, dst + (kk + 1) * cells, bias[kk]);
        k.gemm(false, false, g.k, cells, g.patch(), wt.data(), g.patch(), colp, cells, T(1), dst, cells);
    }
    return out;
}

template <typename T>
void conv_backward(const ConvGeometry& g, const BackwardArgs<T>& a) {
    const auto& k = kernels::active<T>();
    const Tensor<T>& in = *a.inputs[0];
    const Tensor<T>& wt = *a.inputs[1];
    Tensor<T>* gin = a.grad_inputs[0];
    Tensor<T>* gwt = a.grad_inputs[1];
    Tensor<T>* gb = a.grad_inputs[2];
    const std::size_t cells = g.out_cells();
    std::vector<T> cols(g.pointwise() ? 0 : g.patch() * cells);
    std::vector<T> gcols(g.pointwise() || gin == nullptr ? 0 : g.patch() * cells);
    for (std::size_t n = 0; n < g.n; ++n) {
        const T* gout = a.grad_output.data() + n * g.k * cells;
        const T* src = in.data() + n * g.c * g.h * g.w;
        if (gb != nullptr) {
            for (std::size_t kk = 0; kk < g.k; ++kk) (*gb)[kk] += k.sum(cells, gout + kk * cells);
        }
        if (gwt != nullptr) {
            const T* colp = src;
            if (!g.pointwise()) {
                im2col(g, src, cols.data());
                colp = cols.data();
            }
            k.gemm(false, true, g.k, g.patch(), cells, gout, cells, colp, cells, T(1), gwt->data(),
                   g.patch());
        }
        if (gin != nullptr) {
            T* gdst = gin->data() + n * g.c * g.h * g.w;
            if (g.pointwise()) {
                k.gemm(true, false, g.c, cells, g.k, wt.data(), g.patch(), gout, cells, T(1), gdst, cells);
            } else {
                k.gemm(true, false, g.patch(), cells, g.k, wt.data(), g.patch(), gout, cells, T(0),
                       gcols.data(), cells);
                col2im_add(g, gcols.data(), gdst);
            }
        }
    }
}

struct PoolGeometry {
    std::size_t n, c, h, w;
    std::size_t window, stride, pad;
    std::size_t oh, ow;
};

PoolGeometry pool_geometry(const Shape& in, std::size_t window, std::size_t stride, std::size_t pad) {
    require_rank(in, 4, "maxpool2d", "input");
    if (window == 0 || stride == 0) throw ShapeError("maxpool2d: window and stride must be >= 1");
    if (pad >= window) throw ShapeError("maxpool2d: padding must be smaller than the window");
    if (window > in[2] + 2 * pad || window > in[3] + 2 * pad) {
        throw ShapeError("maxpool2d: window " + std::to_string(window) + " larger than padded input " +
                         in.str());
    }
    return {in[0], in[1], in[2], in[3], window, stride, pad,
            (in[2] + 2 * pad - window) / stride + 1, (in[3] + 2 * pad - window) / stride + 1};
}

// Flat index (within the channel plane) of the first maximal element of a window.
template <typename T>
std::size_t pool_argmax(const PoolGeometry& g, const T* plane, std::size_t oy, std::size_t ox) {
    const auto y0 = static_cast<std::ptrdiff_t>(oy * g.stride) - static_cast<std::ptrdiff_t>(g.pad);
    const auto x0 = static_cast<std::ptrdiff_t>(ox * g.stride) - static_cast<std::ptrdiff_t>(g.pad);
    std::size_t best = 0;
    T best_v = -std::numeric_limits<T>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < g.window; ++i) {
        const auto y = y0 + static_cast<std::ptrdiff_t>(i);
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t j = 0; j < g.window; ++j) {
            const auto x = x0 + static_cast<std::ptrdiff_t>(j);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const std::size_t idx = static_cast<std::size_t>(y) * g.w + static_cast<std::size_t>(x);
            if (!found || plane[idx] > best_v) {
                best = idx;
                best_v = plane[idx];
                found = true;
            }
        }
    }
    return best;
}

}  // namespace

template <typename T>
T stable_sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, Conv2dSpec spec) {
    const ConvGeometry geo = conv_geometry(input.shape(), weight.shape(), bias.shape(), spec);
    return input.graph().apply(
        "conv2d", {input, weight, bias},
        [geo](Inputs<T> in) { return conv_forward(geo, *in[0], *in[1], *in[2]); },
        [geo](const BackwardArgs<T>& a) { conv_backward(geo, a); });
}

template <typename T>
Var<T> maxpool2d(const Var<T>& input, std::size_t window, std::size_t stride, std::size_t padding) {
    const PoolGeometry geo = pool_geometry(input.shape(), window, stride, padding);
    return input.graph().apply(
        "maxpool2d", {input},
        [geo](Inputs<T> in) {
            Tensor<T> out(Shape{geo.n, geo.c, geo.oh, geo.ow});
            const std::size_t plane = geo.h * geo.w;
            T* dst = out.data();
            for (std::size_t nc = 0; nc < geo.n * geo.c; ++nc) {
                const T* src = in[0]->data() + nc * plane;
                for (std::size_t oy = 0; oy < geo.oh; ++oy) {
                    for (std::size_t ox = 0; ox < geo.ow; ++ox) *dst++ = src[pool_argmax(geo, src, oy, ox)];
                }
            }
            return out;
        },
        [geo](const BackwardArgs<T>& a) {
            const std::size_t plane = geo.h * geo.w;
            const T* gout = a.grad_output.data();
            for (std::size_t nc = 0; nc < geo.n * geo.c; ++nc) {
                const T* src = a.inputs[0]->data() + nc * plane;
                T* gdst = a.grad_inputs[0]->data() + nc * plane;
                for (std::size_t oy = 0; oy < geo.oh; ++oy) {
                    for (std::size_t ox = 0; ox < geo.ow; ++ox) gdst[pool_argmax(geo, src, oy, ox)] += *gout++;
                }
            }
        });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
    return x.graph().apply(
        "relu", {x},
        [](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            kernels::active<T>().relu(out.numel(), in[0]->data(), out.data());
            return out;
        },
        [](const BackwardArgs<T>& a) {
            kernels::active<T>().relu_backward(a.output.numel(), a.inputs[0]->data(),
                                               a.grad_output.data(), a.grad_inputs[0]->data());
        });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
    return x.graph().apply(
        "sigmoid", {x},
        [](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid((*in[0])[i]);
            return out;
        },
        [](const BackwardArgs<T>& a) {
            Tensor<T>& g = *a.grad_inputs[0];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                const T s = a.output[i];
                g[i] += a.grad_output[i] * s * (T(1) - s);
            }
        });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require_same(a.shape(), b.shape(), "add");
    return a.graph().apply(
        "add", {a, b},
        [](Inputs<T> in) {
            Tensor<T> out = *in[0];
            out.add_(*in[1]);
            return out;
        },
        [](const BackwardArgs<T>& args) {
            for (Tensor<T>* g : args.grad_inputs) {
                if (g != nullptr) g->add_(args.grad_output);
            }
        });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    require_same(a.shape(), b.shape(), "mul");
    return a.graph().apply(
        "mul", {a, b},
        [](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = (*in[0])[i] * (*in[1])[i];
            return out;
        },
        [](const BackwardArgs<T>& args) {
            for (std::size_t side = 0; side < 2; ++side) {
                Tensor<T>* g = args.grad_inputs[side];
                if (g == nullptr) continue;
                const Tensor<T>& other = *args.inputs[1 - side];
                for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += args.grad_output[i] * other[i];
            }
        });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
    return x.graph().apply(
        "scale", {x},
        [factor](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = factor * (*in[0])[i];
            return out;
        },
        [factor](const BackwardArgs<T>& a) {
            kernels::active<T>().axpy(a.output.numel(), factor, a.grad_output.data(),
                                      a.grad_inputs[0]->data());
        });
}

template <typename T>
Var<T> average(const Var<T>& a, const Var<T>& b) {
    require_same(a.shape(), b.shape(), "average");
    return a.graph().apply(
        "average", {a, b},
        [](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = T(0.5) * ((*in[0])[i] + (*in[1])[i]);
            return out;
        },
        [](const BackwardArgs<T>& args) {
            for (Tensor<T>* g : args.grad_inputs) {
                if (g != nullptr) {
                    kernels::active<T>().axpy(g->numel(), T(0.5), args.grad_output.data(), g->data());
                }
            }
        });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    return x.graph().apply(
        "sum", {x},
        [](Inputs<T> in) { return Tensor<T>::scalar(kernels::active<T>().sum(in[0]->numel(), in[0]->data())); },
        [](const BackwardArgs<T>& a) {
            const T g = a.grad_output[0];
            for (auto& v : a.grad_inputs[0]->storage()) v += g;
        });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
    require_rank(x.shape(), 2, "linear", "input");
    require_rank(weight.shape(), 2, "linear", "weight");
    if (weight.shape()[1] != x.shape()[1]) {
        throw ShapeError("linear: input " + x.shape().str() + " does not match weight " + weight.shape().str());
    }
    if (bias.shape() != Shape{weight.shape()[0]}) {
        throw ShapeError("linear: bias " + bias.shape().str() + " does not match weight " + weight.shape().str());
    }
    const std::size_t n = x.shape()[0];
    const std::size_t in_f = x.shape()[1];
    const std::size_t out_f = weight.shape()[0];
    return x.graph().apply(
        "linear", {x, weight, bias},
        [=](Inputs<T> in) {
            Tensor<T> out(Shape{n, out_f});
            for (std::size_t r = 0; r < n; ++r) std::copy_n(in[2]->data(), out_f, out.data() + r * out_f);
            kernels::active<T>().gemm(false, true, n, out_f, in_f, in[0]->data(), in_f, in[1]->data(), in_f,
                                      T(1), out.data(), out_f);
            return out;
        },
        [=](const BackwardArgs<T>& a) {
            const auto& k = kernels::active<T>();
            const T* gy = a.grad_output.data();
            if (a.grad_inputs[0] != nullptr) {
                k.gemm(false, false, n, in_f, out_f, gy, out_f, a.inputs[1]->data(), in_f, T(1),
                       a.grad_inputs[0]->data(), in_f);
            }
            if (a.grad_inputs[1] != nullptr) {
                k.gemm(true, false, out_f, in_f, n, gy, out_f, a.inputs[0]->data(), in_f, T(1),
                       a.grad_inputs[1]->data(), in_f);
            }
            if (a.grad_inputs[2] != nullptr) {
                for (std::size_t r = 0; r < n; ++r) k.axpy(out_f, T(1), gy + r * out_f, a.grad_inputs[2]->data());
            }
        });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
    require_rank(x.shape(), 4, "global_avg_pool", "input");
    const std::size_t nc = x.shape()[0] * x.shape()[1];
    const std::size_t cells = x.shape()[2] * x.shape()[3];
    const Shape out_shape{x.shape()[0], x.shape()[1]};
    return x.graph().apply(
        "global_avg_pool", {x},
        [=](Inputs<T> in) {
            Tensor<T> out(out_shape);
            const auto& k = kernels::active<T>();
            for (std::size_t i = 0; i < nc; ++i) out[i] = k.sum(cells, in[0]->data() + i * cells) / T(cells);
            return out;
        },
        [=](const BackwardArgs<T>& a) {
            T* g = a.grad_inputs[0]->data();
            for (std::size_t i = 0; i < nc; ++i) {
                const T v = a.grad_output[i] / T(cells);
                for (std::size_t j = 0; j < cells; ++j) g[i * cells + j] += v;
            }
        });
}

template <typename T>
Var<T> flatten(const Var<T>& x) {
    if (x.shape().rank() < 1) throw ShapeError("flatten: input must have a batch dimension");
    const std::size_t n = x.shape()[0];
    const Shape out_shape{n, n == 0 ? 0 : x.value().numel() / n};
    return x.graph().apply(
        "flatten", {x}, [out_shape](Inputs<T> in) { return in[0]->reshaped(out_shape); },
        [](const BackwardArgs<T>& a) {
            kernels::active<T>().axpy(a.output.numel(), T(1), a.grad_output.data(), a.grad_inputs[0]->data());
        });
}

template <typename T>
Var<T> channel_mix(const Var<T>& weights, const Var<T>& features) {
    require_rank(weights.shape(), 3, "channel_mix", "weights");
    require_rank(features.shape(), 4, "channel_mix", "features");
    const Shape& ws = weights.shape();
    const Shape& fs = features.shape();
    if (ws[0] != fs[0] || ws[2] != fs[1]) {
        throw ShapeError("channel_mix: weights " + ws.str() + " do not match features " + fs.str());
    }
    const std::size_t n = fs[0], kc = fs[1], cells = fs[2] * fs[3], c = ws[1];
    const Shape out_shape{n, c, fs[2], fs[3]};
    return weights.graph().apply(
        "channel_mix", {weights, features},
        [=](Inputs<T> in) {
            Tensor<T> out(out_shape);
            const auto& k = kernels::active<T>();
            for (std::size_t b = 0; b < n; ++b) {
                k.gemm(false, false, c, cells, kc, in[0]->data() + b * c * kc, kc,
                       in[1]->data() + b * kc * cells, cells, T(0), out.data() + b * c * cells, cells);
            }
            return out;
        },
        [=](const BackwardArgs<T>& a) {
            const auto& k = kernels::active<T>();
            for (std::size_t b = 0; b < n; ++b) {
                const T* gy = a.grad_output.data() + b * c * cells;
                if (a.grad_inputs[0] != nullptr) {
                    k.gemm(false, true, c, kc, cells, gy, cells, a.inputs[1]->data() + b * kc * cells, cells,
                           T(1), a.grad_inputs[0]->data() + b * c * kc, kc);
                }
                if (a.grad_inputs[1] != nullptr) {
                    k.gemm(true, false, kc, cells, c, a.inputs[0]->data() + b * c * kc, kc, gy, cells, T(1),
                           a.grad_inputs[1]->data() + b * kc * cells, cells);
                }
            }
        });
}

template <typename T>
Var<T> spatial_softmax(const Var<T>& x) {
    require_rank(x.shape(), 4, "spatial_softmax", "input");
    const std::size_t slices = x.shape()[0] * x.shape()[1];
    const std::size_t cells = x.shape()[2] * x.shape()[3];
    return x.graph().apply(
        "spatial_softmax", {x},
        [=](Inputs<T> in) {
            Tensor<T> out(in[0]->shape());
            for (std::size_t s = 0; s < slices; ++s) {
                const T* src = in[0]->data() + s * cells;
                T* dst = out.data() + s * cells;
                const T m = *std::max_element(src, src + cells);
                T total = T(0);
                for (std::size_t j = 0; j < cells; ++j) {
                    dst[j] = std::exp(src[j] - m);
                    total += dst[j];
                }
                // Entries that underflow keep the smallest normal value so every map stays strictly positive.
                for (std::size_t j = 0; j < cells; ++j) dst[j] = std::max(dst[j] / total, std::numeric_limits<T>::min());
            }
            return out;
        },
        [=](const BackwardArgs<T>& a) {
            for (std::size_t s = 0; s < slices; ++s) {
                const T* y = a.output.data() + s * cells;
                const T* gy = a.grad_output.data() + s * cells;
                T* gx = a.grad_inputs[0]->data() + s * cells;
                T inner = T(0);
                for (std::size_t j = 0; j < cells; ++j) inner += gy[j] * y[j];
                for (std::size_t j = 0; j < cells; ++j) gx[j] += y[j] * (gy[j] - inner);
            }
        });
}

template <typename T>
Var<T> bce_loss(const Var<T>& pred, const Tensor<T>& target) {
    require_rank(pred.shape(), 2, "bce_loss", "prediction");
    require_same(pred.shape(), target.shape(), "bce_loss");
    const std::size_t batch = pred.shape()[0];
    const T eps = T(kBceEpsilon);
    const T hi = T(1) - eps;
    return pred.graph().apply(
        "bce_loss", {pred},
        [=](Inputs<T> in) {
            T total = T(0);
            for (std::size_t i = 0; i < target.numel(); ++i) {
                const T p = std::clamp((*in[0])[i], eps, hi);
                const T y = target[i];
                total -= y * std::log(p) + (T(1) - y) * std::log(T(1) - p);
            }
            return Tensor<T>::scalar(total / T(batch));
        },
        [=](const BackwardArgs<T>& a) {
            const T g = a.grad_output[0] / T(batch);
            Tensor<T>& gx = *a.grad_inputs[0];
            for (std::size_t i = 0; i < target.numel(); ++i) {
                const T p = (*a.inputs[0])[i];
                if (!(p > eps && p < hi)) continue;
                const T y = target[i];
                gx[i] += g * ((T(1) - y) / (T(1) - p) - y / p);
            }
        });
}

#define CHESTNET_INSTANTIATE_OPS(T)                                                       \
    template T stable_sigmoid<T>(T);                                                      \
    template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, Conv2dSpec);   \
    template Var<T> maxpool2d<T>(const Var<T>&, std::size_t, std::size_t, std::size_t);   \
    template Var<T> relu<T>(const Var<T>&);                                               \
    template Var<T> sigmoid<T>(const Var<T>&);                                            \
    template Var<T> add<T>(const Var<T>&, const Var<T>&);                                 \
    template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                 \
    template Var<T> scale<T>(const Var<T>&, T);                                           \
    template Var<T> average<T>(const Var<T>&, const Var<T>&);                             \
    template Var<T> sum<T>(const Var<T>&);                                                \
    template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);               \
    template Var<T> global_avg_pool<T>(const Var<T>&);                                    \
    template Var<T> flatten<T>(const Var<T>&);                                            \
    template Var<T> channel_mix<T>(const Var<T>&, const Var<T>&);                         \
    template Var<T> spatial_softmax<T>(const Var<T>&);                                    \
    template Var<T> bce_loss<T>(const Var<T>&, const Tensor<T>&);

CHESTNET_INSTANTIATE_OPS(float)
CHESTNET_INSTANTIATE_OPS(double)

#undef CHESTNET_INSTANTIATE_OPS

}  // namespace chestnet::ops
