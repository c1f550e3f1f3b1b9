#include "stnhcl/numeric/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stnhcl/numeric/parallel.hpp"

namespace stnhcl::numeric::kernels {

namespace {
constexpr std::size_t kParallelWork = 1u << 20;

template <class T>
void gemm_rows(std::size_t r0, std::size_t r1, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
               bool accumulate) {
    for (std::size_t i = r0; i < r1; ++i) {
        T* crow = c + i * n;
        if (!accumulate) std::fill(crow, crow + n, T(0));
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace

template <class T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
    if (m * n * k < kParallelWork) {
        gemm_rows(0, m, n, k, a, b, c, accumulate);
        return;
    }
    const std::size_t per_row = std::max<std::size_t>(1, n * k);
    parallel_for(m, std::max<std::size_t>(1, kParallelWork / per_row),
                 [&](std::size_t r0, std::size_t r1) { gemm_rows(r0, r1, n, k, a, b, c, accumulate); });
}

template <class T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
    std::vector<T> at(m * k);
    transpose(k, m, a, at.data());
    gemm_nn(m, n, k, at.data(), b, c, accumulate);
}

template <class T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
    std::vector<T> bt(k * n);
    transpose(n, k, b, bt.data());
    gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

template <class T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
    constexpr std::size_t B = 32;
    for (std::size_t i0 = 0; i0 < rows; i0 += B) {
        for (std::size_t j0 = 0; j0 < cols; j0 += B) {
            const std::size_t i1 = std::min(rows, i0 + B), j1 = std::min(cols, j0 + B);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = in[i * cols + j];
        }
    }
}

template <class T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
    const std::size_t plane = g.out_h * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c) {
        const T* src = image + c * g.height * g.width;
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                T* dst = cols + ((c * g.kernel + ki) * g.kernel + kj) * plane;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
                    T* drow = dst + oy * g.out_w;
                    if (iy < 0 || iy >= static_cast<long>(g.height)) {
                        std::fill(drow, drow + g.out_w, T(0));
                        continue;
                    }
                    const T* srow = src + static_cast<std::size_t>(iy) * g.width;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
                        drow[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T(0)
                                                                                 : srow[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <class T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
    const std::size_t plane = g.out_h * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c) {
        T* dst = image + c * g.height * g.width;
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                const T* src = cols + ((c * g.kernel + ki) * g.kernel + kj) * plane;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
                    if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                    T* drow = dst + static_cast<std::size_t>(iy) * g.width;
                    const T* srow = src + oy * g.out_w;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
                        if (ix >= 0 && ix < static_cast<long>(g.width)) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

template <class T>
void softmax(std::size_t outer, std::size_t axis, std::size_t inner, const T* x, T* y) {
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * axis * inner + in;
            T mx = -std::numeric_limits<T>::infinity();
            for (std::size_t a = 0; a < axis; ++a) mx = std::max(mx, x[base + a * inner]);
            T total = 0;
            for (std::size_t a = 0; a < axis; ++a) {
                const T e = std::exp(x[base + a * inner] - mx);
                y[base + a * inner] = e;
                total += e;
            }
            for (std::size_t a = 0; a < axis; ++a) y[base + a * inner] /= total;
        }
    }
}

#define STNHCL_INSTANTIATE(T)                                                                       \
    template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);  \
    template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);  \
    template void gemm_nt<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);  \
    template void transpose<T>(std::size_t, std::size_t, const T*, T*);                             \
    template void im2col<T>(const ConvGeometry&, const T*, T*);                                     \
    template void col2im<T>(const ConvGeometry&, const T*, T*);                                     \
    template void softmax<T>(std::size_t, std::size_t, std::size_t, const T*, T*);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::numeric::kernels
