#pragma once

#include <cstddef>
#include <vector>

#include "stnhcl/numeric/tensor.hpp"

namespace stnhcl::metrics {

struct CssOptions {
    std::size_t window = 8;
    double c2 = 0.03 * 0.03;
    double c3 = 0.03 * 0.03 / 2.0;
};

// Rec. 601 luma of a [3, h, w] image; [h, w] inputs are returned as is.
template <class T>
numeric::Tensor<double> grayscale(const numeric::Tensor<T>& image);

// Mean over all window x window positions (stride 1) of the contrast and
// structure factors of SSIM on grayscale:
//   (2 sa sb + C2) / (sa^2 + sb^2 + C2) * (sab + C3) / (sa sb + C3)
// with population (co)variances. Extents must agree (ContractError).
template <class T>
double css(const numeric::Tensor<T>& a, const numeric::Tensor<T>& b, const CssOptions& opt = {});

struct CssReport {
    double mean = 0.0;
    std::vector<double> values;
};

CssReport summarize(std::vector<double> values);

// Mean of the per-pixel minimum channel over pixels where mask == 0.
template <class T>
double background_whiteness(const numeric::Tensor<T>& image, const numeric::Tensor<T>& mask);

}  // namespace stnhcl::metrics
