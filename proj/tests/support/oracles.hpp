#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "chestnet/graph.hpp"
#include "chestnet/ops.hpp"
#include "chestnet/params.hpp"
#include "chestnet/rng.hpp"
#include "chestnet/tensor.hpp"

namespace chestnet::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<T> t(std::move(shape));
    for (auto& v : t.storage()) v = static_cast<T>(u(rng));
    return t;
}

/// Direct seven-loop cross-correlation.
inline Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                                   std::size_t stride, std::size_t pad) {
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::size_t OH = (H + 2 * pad - kh) / stride + 1, OW = (W + 2 * pad - kw) / stride + 1;
    Tensor<double> out(Shape{N, K, OH, OW});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t oy = 0; oy < OH; ++oy)
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double acc = b[k];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t i = 0; i < kh; ++i)
                            for (std::size_t j = 0; j < kw; ++j) {
                                const long y = static_cast<long>(oy * stride + i) - static_cast<long>(pad);
                                const long xx = static_cast<long>(ox * stride + j) - static_cast<long>(pad);
                                if (y < 0 || xx < 0 || y >= static_cast<long>(H) || xx >= static_cast<long>(W))
                                    continue;
                                acc += x.at(n, c, y, xx) * w.at(k, c, i, j);
                            }
                    out.at(n, k, oy, ox) = acc;
                }
    return out;
}

/// Window scan; returns values and the flat input index of each winner
/// (first maximum in row-major window order, padding never wins).
struct PoolOracle {
    Tensor<double> values;
    std::vector<std::size_t> winners;
};

inline PoolOracle naive_maxpool(const Tensor<double>& x, std::size_t window, std::size_t stride, std::size_t pad) {
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t OH = (H + 2 * pad - window) / stride + 1, OW = (W + 2 * pad - window) / stride + 1;
    PoolOracle r{Tensor<double>(Shape{N, C, OH, OW}), {}};
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t oy = 0; oy < OH; ++oy)
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t arg = 0;
                    for (std::size_t i = 0; i < window; ++i)
                        for (std::size_t j = 0; j < window; ++j) {
                            const long y = static_cast<long>(oy * stride + i) - static_cast<long>(pad);
                            const long xx = static_cast<long>(ox * stride + j) - static_cast<long>(pad);
                            if (y < 0 || xx < 0 || y >= static_cast<long>(H) || xx >= static_cast<long>(W))
                                continue;
                            const double v = x.at(n, c, y, xx);
                            if (v > best) {
                                best = v;
                                arg = ((n * C + c) * H + y) * W + xx;
                            }
                        }
                    r.values.at(n, c, oy, ox) = best;
                    r.winners.push_back(arg);
                }
    return r;
}

/// O(n^2) Mann-Whitney statistic with ties counted half.
inline double pair_count_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            ++pairs;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

struct GradCheckStats {
    std::size_t checked = 0;
    std::size_t kinks = 0;  // entries where one-sided slopes disagree (non-differentiable point)
    std::size_t above_1e4 = 0;
    double worst = 0.0;
    std::vector<double> errors;
};

/// Central-difference check of every entry of every parameter flagged in
/// `check` against the reverse-mode gradient of the scalar built by `loss`.
/// Relative error is |a - n| / max(|a|, |n|, floor). Entries where the
/// forward and backward one-sided slopes differ by more than `kink_tol`
/// (a ReLU or max-pool switch inside the step) are counted as kinks and
/// not compared.
inline GradCheckStats gradcheck(ParamStore<double>& params,
                                const std::function<Var<double>(Graph<double>&)>& loss,
                                const std::vector<bool>& check, double h = 1e-6, double floor = 1e-6,
                                double kink_tol = 1e-3) {
    std::vector<Tensor<double>> analytic;
    {
        Graph<double> g(&params, check);
        const Var<double> l = loss(g);
        analytic = g.param_grads(g.backward(l));
    }
    auto eval = [&] {
        Graph<double> g(&params, std::vector<bool>(params.size(), false));
        return loss(g).value().item();
    };
    const double f0 = eval();
    GradCheckStats st;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!check[p]) continue;
        auto& v = params.value(p).storage();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double orig = v[i];
            v[i] = orig + h;
            const double fp = eval();
            v[i] = orig - h;
            const double fm = eval();
            v[i] = orig;
            const double right = (fp - f0) / h, left = (f0 - fm) / h;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[p][i];
            if (std::abs(right - left) > kink_tol * std::max({std::abs(right), std::abs(left), 1e-2})) {
                ++st.kinks;
                continue;
            }
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            ++st.checked;
            st.errors.push_back(err);
            st.worst = std::max(st.worst, err);
            if (err >= 1e-4) ++st.above_1e4;
        }
    }
    return st;
}

}  // namespace chestnet::testing
