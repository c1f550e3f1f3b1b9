#include "stnhcl/numeric/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "stnhcl/numeric/kernels.hpp"
#include "stnhcl/numeric/kinks.hpp"

namespace stnhcl::numeric {

namespace {

template <class T>
void require_same_graph(Var<T> a, Var<T> b) {
    if (!a.valid() || !b.valid()) throw ContractError("operation on an unbound variable");
    if (&a.graph() != &b.graph()) throw ContractError("operands recorded on different graphs");
}

template <class T>
void require_rank(Var<T> x, std::size_t rank, const char* op) {
    if (x.shape().size() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                             shape_str(x.shape()));
    }
}

// Elementwise unary op. `df(x, y)` is the derivative given input and output.
template <class T, class F, class DF>
Var<T> unary_op(Var<T> x, F f, DF df) {
    const auto& xv = x.value();
    Tensor<T> out(xv.shape());
    for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = f(xv[i]);
    auto yval = std::make_shared<Tensor<T>>(out);
    return x.graph().record(std::move(out), {x}, [x, yval, df](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x)) {
            const auto& xv = x.value();
            for (std::size_t i = 0; i < go.numel(); ++i) (*gx)[i] += go[i] * df(xv[i], (*yval)[i]);
        }
    });
}

std::vector<std::size_t> broadcast_index(const Shape& from, const Shape& to) {
    // For every element of `to`, the flat index of its source in `from`.
    const std::size_t r = to.size();
    std::vector<std::size_t> src_stride(r, 0);
    {
        std::size_t stride = 1;
        for (std::size_t d = 0; d < from.size(); ++d) {
            const std::size_t fd = from.size() - 1 - d;
            const std::size_t td = r - 1 - d;
            src_stride[td] = from[fd] == 1 ? 0 : stride;
            stride *= from[fd];
        }
    }
    const std::size_t n = shape_numel(to);
    std::vector<std::size_t> idx(n);
    std::vector<std::size_t> counter(r, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t s = 0;
        for (std::size_t d = 0; d < r; ++d) s += counter[d] * src_stride[d];
        idx[flat] = s;
        for (std::size_t d = r; d-- > 0;) {
            if (++counter[d] < to[d]) break;
            counter[d] = 0;
        }
    }
    return idx;
}

struct AxisView {
    std::size_t outer, axis, inner;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    AxisView v{1, s[axis], 1};
    for (std::size_t d = 0; d < axis; ++d) v.outer *= s[d];
    for (std::size_t d = axis + 1; d < s.size(); ++d) v.inner *= s[d];
    return v;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t d = 0; d < r; ++d) {
        const std::size_t ad = d < r - a.size() ? 1 : a[d - (r - a.size())];
        const std::size_t bd = d < r - b.size() ? 1 : b[d - (r - b.size())];
        if (ad != bd && ad != 1 && bd != 1) {
            throw DimensionError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        }
        out[d] = std::max(ad, bd);
    }
    return out;
}

std::size_t conv_out_extent(std::size_t n, std::size_t kernel, std::size_t stride, std::size_t pad) {
    if (stride == 0) throw DimensionError("conv2d: stride must be positive");
    const long span = static_cast<long>(n + 2 * pad) - static_cast<long>(kernel);
    if (span < 0) {
        throw DimensionError("conv2d: kernel " + std::to_string(kernel) + " does not fit padded extent " +
                             std::to_string(n + 2 * pad));
    }
    return static_cast<std::size_t>(span) / stride + 1;
}

template <class T>
Var<T> broadcast_to(Var<T> x, const Shape& shape) {
    if (x.shape() == shape) return x;
    if (broadcast_shape(x.shape(), shape) != shape) {
        throw DimensionError("cannot broadcast " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    auto idx = std::make_shared<std::vector<std::size_t>>(broadcast_index(x.shape(), shape));
    const auto& xv = x.value();
    Tensor<T> out(shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = xv[(*idx)[i]];
    return x.graph().record(std::move(out), {x}, [x, idx](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x))
            for (std::size_t i = 0; i < go.numel(); ++i) (*gx)[(*idx)[i]] += go[i];
    });
}

namespace {
template <class T, class F, class GA, class GB>
Var<T> binary(Var<T> a, Var<T> b, F f, GA ga_fn, GB gb_fn) {
    require_same_graph(a, b);
    if (a.shape() != b.shape()) {
        const Shape s = broadcast_shape(a.shape(), b.shape());
        a = broadcast_to(a, s);
        b = broadcast_to(b, s);
    }
    const auto& av = a.value();
    const auto& bv = b.value();
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(av[i], bv[i]);
    return a.graph().record(std::move(out), {a, b}, [a, b, ga_fn, gb_fn](Graph<T>& g, const Tensor<T>& go) {
        const auto& av = a.value();
        const auto& bv = b.value();
        if (auto* ga = g.grad_buffer(a))
            for (std::size_t i = 0; i < go.numel(); ++i) (*ga)[i] += ga_fn(go[i], av[i], bv[i]);
        if (auto* gb = g.grad_buffer(b))
            for (std::size_t i = 0; i < go.numel(); ++i) (*gb)[i] += gb_fn(go[i], av[i], bv[i]);
    });
}
}  // namespace

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    return binary(
        a, b, [](T x, T y) { return x + y; }, [](T g, T, T) { return g; }, [](T g, T, T) { return g; });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    return binary(
        a, b, [](T x, T y) { return x - y; }, [](T g, T, T) { return g; }, [](T g, T, T) { return -g; });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
    return binary(
        a, b, [](T x, T y) { return x * y; }, [](T g, T, T y) { return g * y; }, [](T g, T x, T) { return g * x; });
}

template <class T>
Var<T> div(Var<T> a, Var<T> b) {
    return binary(
        a, b, [](T x, T y) { return x / y; }, [](T g, T, T y) { return g / y; },
        [](T g, T x, T y) { return -g * x / (y * y); });
}

template <class T>
Var<T> neg(Var<T> x) {
    return unary_op(x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <class T>
Var<T> scale(Var<T> x, double s) {
    const T k = static_cast<T>(s);
    return unary_op(x, [k](T v) { return k * v; }, [k](T, T) { return k; });
}

template <class T>
Var<T> add_scalar(Var<T> x, double s) {
    const T k = static_cast<T>(s);
    return unary_op(x, [k](T v) { return v + k; }, [](T, T) { return T(1); });
}

template <class T>
Var<T> exp(Var<T> x) {
    return unary_op(x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
Var<T> log(Var<T> x) {
    return unary_op(x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <class T>
void note_kinks(Var<T> x) {
    if (auto* rec = KinkRecorder::current())
        for (auto v : x.value().data()) rec->push(v > T(0));
}

template <class T>
Var<T> relu(Var<T> x) {
    note_kinks(x);
    return unary_op(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> leaky_relu(Var<T> x, double slope) {
    note_kinks(x);
    const T k = static_cast<T>(slope);
    return unary_op(x, [k](T v) { return v > T(0) ? v : k * v; }, [k](T v, T) { return v > T(0) ? T(1) : k; });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
    return unary_op(
        x,
        [](T v) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            const T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> reshape(Var<T> x, const Shape& shape) {
    Tensor<T> out = x.value().reshaped(shape);
    return x.graph().record(std::move(out), {x}, [x](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x))
            for (std::size_t i = 0; i < go.numel(); ++i) (*gx)[i] += go[i];
    });
}

template <class T>
Var<T> transpose(Var<T> x) {
    require_rank(x, 2, "transpose");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    Tensor<T> out({c, r});
    kernels::transpose(r, c, x.value().data().data(), out.data().data());
    return x.graph().record(std::move(out), {x}, [x, r, c](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x)) {
            std::vector<T> tmp(r * c);
            kernels::transpose(c, r, go.data().data(), tmp.data());
            for (std::size_t i = 0; i < tmp.size(); ++i) (*gx)[i] += tmp[i];
        }
    });
}

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
    require_same_graph(a, b);
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    Tensor<T> out({m, n});
    kernels::gemm_nn(m, n, k, a.value().data().data(), b.value().data().data(), out.data().data(), false);
    return a.graph().record(std::move(out), {a, b}, [a, b, m, n, k](Graph<T>& g, const Tensor<T>& go) {
        if (auto* ga = g.grad_buffer(a))
            kernels::gemm_nt(m, k, n, go.data().data(), b.value().data().data(), ga->data().data(), true);
        if (auto* gb = g.grad_buffer(b))
            kernels::gemm_tn(k, n, m, a.value().data().data(), go.data().data(), gb->data().data(), true);
    });
}

template <class T>
Var<T> sum(Var<T> x) {
    T total = 0;
    for (auto v : x.value().data()) total += v;
    return x.graph().record(Tensor<T>::scalar(total), {x}, [x](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x))
            for (auto& v : gx->data()) v += go[0];
    });
}

template <class T>
Var<T> mean(Var<T> x) {
    const std::size_t n = x.value().numel();
    if (n == 0) throw DimensionError("mean of an empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

template <class T>
Var<T> sum(Var<T> x, std::size_t axis, bool keepdim) {
    const auto v = axis_view(x.shape(), axis);
    Shape out_shape = x.shape();
    if (keepdim)
        out_shape[axis] = 1;
    else
        out_shape.erase(out_shape.begin() + static_cast<long>(axis));
    Tensor<T> out(out_shape);
    const auto& xv = x.value();
    for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t a = 0; a < v.axis; ++a)
            for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += xv[(o * v.axis + a) * v.inner + i];
    return x.graph().record(std::move(out), {x}, [x, v](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x))
            for (std::size_t o = 0; o < v.outer; ++o)
                for (std::size_t a = 0; a < v.axis; ++a)
                    for (std::size_t i = 0; i < v.inner; ++i)
                        (*gx)[(o * v.axis + a) * v.inner + i] += go[o * v.inner + i];
    });
}

template <class T>
Var<T> mean(Var<T> x, std::size_t axis, bool keepdim) {
    const std::size_t n = x.shape().at(axis);
    if (n == 0) throw DimensionError("mean over an empty axis");
    return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(n));
}

template <class T>
Var<T> gather_rows(Var<T> x, std::span<const std::size_t> rows) {
    require_rank(x, 2, "gather_rows");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
    for (auto i : *idx)
        if (i >= r) throw IndexError("gather_rows: row " + std::to_string(i) + " out of " + std::to_string(r));
    Tensor<T> out({idx->size(), c});
    const auto& xv = x.value();
    for (std::size_t k = 0; k < idx->size(); ++k)
        std::copy_n(xv.data().begin() + static_cast<long>((*idx)[k] * c), c, out.data().begin() + static_cast<long>(k * c));
    return x.graph().record(std::move(out), {x}, [x, idx, c](Graph<T>& g, const Tensor<T>& go) {
        if (auto* gx = g.grad_buffer(x))
            for (std::size_t k = 0; k < idx->size(); ++k)
                for (std::size_t j = 0; j < c; ++j) (*gx)[(*idx)[k] * c + j] += go[k * c + j];
    });
}

template <class T>
Var<T> softmax(Var<T> x, std::size_t axis) {
    const auto v = axis_view(x.shape(), axis);
    Tensor<T> out(x.shape());
    kernels::softmax(v.outer, v.axis, v.inner, x.value().data().data(), out.data().data());
    auto y = std::make_shared<Tensor<T>>(out);
    return x.graph().record(std::move(out), {x}, [x, y, v](Graph<T>& g, const Tensor<T>& go) {
        auto* gx = g.grad_buffer(x);
        if (!gx) return;
        for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t i = 0; i < v.inner; ++i) {
                const std::size_t base = o * v.axis * v.inner + i;
                T dot = 0;
                for (std::size_t a = 0; a < v.axis; ++a) dot += go[base + a * v.inner] * (*y)[base + a * v.inner];
                for (std::size_t a = 0; a < v.axis; ++a) {
                    const std::size_t p = base + a * v.inner;
                    (*gx)[p] += (*y)[p] * (go[p] - dot);
                }
            }
    });
}

template <class T>
Var<T> l2_normalize(Var<T> x, double eps) {
    require_rank(x, 2, "l2_normalize");
    const std::size_t k = x.shape()[0], d = x.shape()[1];
    const auto& xv = x.value();
    auto norms = std::make_shared<std::vector<T>>(k);
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < k; ++i) {
        T s = 0;
        for (std::size_t j = 0; j < d; ++j) s += xv[i * d + j] * xv[i * d + j];
        (*norms)[i] = std::sqrt(s);
        const T denom = (*norms)[i] + static_cast<T>(eps);
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] / denom;
    }
    return x.graph().record(std::move(out), {x}, [x, norms, k, d, eps](Graph<T>& g, const Tensor<T>& go) {
        auto* gx = g.grad_buffer(x);
        if (!gx) return;
        const auto& xv = x.value();
        for (std::size_t i = 0; i < k; ++i) {
            const T n = (*norms)[i];
            const T s = n + static_cast<T>(eps);
            T dot = 0;
            for (std::size_t j = 0; j < d; ++j) dot += go[i * d + j] * xv[i * d + j];
            const T corr = n > T(0) ? dot / (n * s * s) : T(0);
            for (std::size_t j = 0; j < d; ++j) (*gx)[i * d + j] += go[i * d + j] / s - xv[i * d + j] * corr;
        }
    });
}

template <class T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t pad) {
    require_same_graph(input, weight);
    require_rank(input, 3, "conv2d input");
    require_rank(weight, 4, "conv2d weight");
    const auto& is = input.shape();
    const auto& ws = weight.shape();
    if (ws[1] != is[0]) {
        throw DimensionError("conv2d: kernel expects " + std::to_string(ws[1]) + " input channels, image has " +
                             std::to_string(is[0]));
    }
    if (ws[2] != ws[3]) throw DimensionError("conv2d: kernels must be square, got " + shape_str(ws));
    const bool has_bias = bias.valid();
    if (has_bias) {
        require_same_graph(input, bias);
        if (bias.shape() != Shape{ws[0]}) throw DimensionError("conv2d: bias must be [" + std::to_string(ws[0]) + "]");
    }
    kernels::ConvGeometry geo{is[0], is[1], is[2], ws[2], stride, pad, 0, 0};
    geo.out_h = conv_out_extent(is[1], ws[2], stride, pad);
    geo.out_w = conv_out_extent(is[2], ws[2], stride, pad);
    const std::size_t c_out = ws[0];
    const std::size_t ckk = is[0] * ws[2] * ws[3];
    const std::size_t plane = geo.out_h * geo.out_w;

    auto cols = std::make_shared<std::vector<T>>(ckk * plane);
    kernels::im2col(geo, input.value().data().data(), cols->data());
    Tensor<T> out({c_out, geo.out_h, geo.out_w});
    kernels::gemm_nn(c_out, plane, ckk, weight.value().data().data(), cols->data(), out.data().data(), false);
    if (has_bias) {
        const auto& bv = bias.value();
        for (std::size_t c = 0; c < c_out; ++c)
            for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] += bv[c];
    }
    std::vector<Var<T>> parents{input, weight};
    if (has_bias) parents.push_back(bias);
    return input.graph().record(
        std::move(out), parents,
        [input, weight, bias, has_bias, geo, cols, c_out, ckk, plane](Graph<T>& g, const Tensor<T>& go) {
            if (auto* gw = g.grad_buffer(weight))
                kernels::gemm_nt(c_out, ckk, plane, go.data().data(), cols->data(), gw->data().data(), true);
            if (has_bias) {
                if (auto* gb = g.grad_buffer(bias))
                    for (std::size_t c = 0; c < c_out; ++c) {
                        T s = 0;
                        for (std::size_t p = 0; p < plane; ++p) s += go[c * plane + p];
                        (*gb)[c] += s;
                    }
            }
            if (auto* gi = g.grad_buffer(input)) {
                std::vector<T> gcols(ckk * plane);
                kernels::gemm_tn(ckk, plane, c_out, weight.value().data().data(), go.data().data(), gcols.data(),
                                 false);
                kernels::col2im(geo, gcols.data(), gi->data().data());
            }
        });
}

template <class T>
Var<T> upsample_nearest(Var<T> x, std::size_t factor) {
    require_rank(x, 3, "upsample_nearest");
    if (factor == 0) throw DimensionError("upsample_nearest: factor must be positive");
    const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const std::size_t oh = h * factor, ow = w * factor;
    Tensor<T> out({c, oh, ow});
    const auto& xv = x.value();
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t xx = 0; xx < ow; ++xx) out.at(ch, y, xx) = xv.at(ch, y / factor, xx / factor);
    return x.graph().record(std::move(out), {x}, [x, c, oh, ow, factor](Graph<T>& g, const Tensor<T>& go) {
        auto* gx = g.grad_buffer(x);
        if (!gx) return;
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xx = 0; xx < ow; ++xx) gx->at(ch, y / factor, xx / factor) += go.at(ch, y, xx);
    });
}

template <class T>
Var<T> mse(Var<T> x, const Tensor<T>& target) {
    if (x.shape() != target.shape()) {
        throw DimensionError("mse: " + shape_str(x.shape()) + " vs target " + shape_str(target.shape()));
    }
    const auto& xv = x.value();
    const std::size_t n = xv.numel();
    if (n == 0) throw DimensionError("mse of an empty tensor");
    T total = 0;
    for (std::size_t i = 0; i < n; ++i) total += (xv[i] - target[i]) * (xv[i] - target[i]);
    auto t = std::make_shared<Tensor<T>>(target);
    return x.graph().record(Tensor<T>::scalar(total / static_cast<T>(n)), {x},
                            [x, t, n](Graph<T>& g, const Tensor<T>& go) {
                                if (auto* gx = g.grad_buffer(x)) {
                                    const auto& xv = x.value();
                                    const T k = T(2) * go[0] / static_cast<T>(n);
                                    for (std::size_t i = 0; i < n; ++i) (*gx)[i] += k * (xv[i] - (*t)[i]);
                                }
                            });
}

template <class T>
Var<T> mse(Var<T> x, double target) {
    return mse(x, Tensor<T>(x.shape(), static_cast<T>(target)));
}

template <class T>
Var<T> weighted_logsumexp(Var<T> s, Var<T> w) {
    require_same_graph(s, w);
    require_rank(s, 2, "weighted_logsumexp");
    if (w.shape() != s.shape()) {
        throw DimensionError("weighted_logsumexp: weights " + shape_str(w.shape()) + " vs scores " +
                             shape_str(s.shape()));
    }
    const std::size_t k = s.shape()[0], n = s.shape()[1];
    const auto& sv = s.value();
    const auto& wv = w.value();
    Tensor<T> out({k});
    for (std::size_t i = 0; i < k; ++i) {
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const T wij = wv[i * n + j];
            if (wij < T(0) || !std::isfinite(wij)) throw ContractError("weighted_logsumexp: weights must be finite and >= 0");
            if (wij > T(0)) mx = std::max(mx, sv[i * n + j]);
        }
        if (!std::isfinite(mx)) throw ContractError("weighted_logsumexp: row " + std::to_string(i) + " has no positive weight");
        T total = 0;
        for (std::size_t j = 0; j < n; ++j) total += wv[i * n + j] * std::exp(sv[i * n + j] - mx);
        out[i] = mx + std::log(total);
    }
    auto lse = std::make_shared<Tensor<T>>(out);
    return s.graph().record(std::move(out), {s, w}, [s, w, lse, k, n](Graph<T>& g, const Tensor<T>& go) {
        const auto& sv = s.value();
        const auto& wv = w.value();
        auto* gs = g.grad_buffer(s);
        auto* gw = g.grad_buffer(w);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const T p = std::exp(sv[i * n + j] - (*lse)[i]);
                if (gs) (*gs)[i * n + j] += go[i] * wv[i * n + j] * p;
                if (gw) (*gw)[i * n + j] += go[i] * p;
            }
    });
}

template <class T>
Var<T> detach(Var<T> x) {
    return x.graph().constant(x.value());
}

#define STNHCL_INSTANTIATE(T)                                                            \
    template Var<T> add(Var<T>, Var<T>);                                                 \
    template Var<T> sub(Var<T>, Var<T>);                                                 \
    template Var<T> mul(Var<T>, Var<T>);                                                 \
    template Var<T> div(Var<T>, Var<T>);                                                 \
    template Var<T> neg(Var<T>);                                                         \
    template Var<T> scale(Var<T>, double);                                               \
    template Var<T> add_scalar(Var<T>, double);                                          \
    template Var<T> exp(Var<T>);                                                         \
    template Var<T> log(Var<T>);                                                         \
    template Var<T> relu(Var<T>);                                                        \
    template Var<T> leaky_relu(Var<T>, double);                                          \
    template Var<T> sigmoid(Var<T>);                                                     \
    template Var<T> broadcast_to(Var<T>, const Shape&);                                  \
    template Var<T> reshape(Var<T>, const Shape&);                                       \
    template Var<T> transpose(Var<T>);                                                   \
    template Var<T> matmul(Var<T>, Var<T>);                                              \
    template Var<T> sum(Var<T>);                                                         \
    template Var<T> mean(Var<T>);                                                        \
    template Var<T> sum(Var<T>, std::size_t, bool);                                      \
    template Var<T> mean(Var<T>, std::size_t, bool);                                     \
    template Var<T> gather_rows(Var<T>, std::span<const std::size_t>);                   \
    template Var<T> softmax(Var<T>, std::size_t);                                        \
    template Var<T> l2_normalize(Var<T>, double);                                        \
    template Var<T> conv2d(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);            \
    template Var<T> upsample_nearest(Var<T>, std::size_t);                               \
    template Var<T> mse(Var<T>, const Tensor<T>&);                                       \
    template Var<T> mse(Var<T>, double);                                                 \
    template Var<T> weighted_logsumexp(Var<T>, Var<T>);                                  \
    template Var<T> detach(Var<T>);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::numeric
