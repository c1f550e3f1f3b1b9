#pragma once

#include <cstddef>
#include <span>

// Raw loops over contiguous row-major buffers. No shape checks here; the
// graph ops validate extents before calling in.
namespace stnhcl::numeric::kernels {

// C[m x n] (+)= A[m x k] * B[k x n]
template <class T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

// C[m x n] (+)= A[k x m]^T * B[k x n]
template <class T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

// C[m x n] (+)= A[m x k] * B[n x k]^T
template <class T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

template <class T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out);

struct ConvGeometry {
    std::size_t channels, height, width;
    std::size_t kernel, stride, pad;
    std::size_t out_h, out_w;
};

// cols[(c*k + ki)*k + kj][oy*out_w + ox]
template <class T>
void im2col(const ConvGeometry& g, const T* image, T* cols);

// Scatter-add of im2col's layout back into an image-shaped buffer.
template <class T>
void col2im(const ConvGeometry& g, const T* cols, T* image);

// Softmax over the middle extent of an [outer x axis x inner] view.
template <class T>
void softmax(std::size_t outer, std::size_t axis, std::size_t inner, const T* x, T* y);

}  // namespace stnhcl::numeric::kernels
