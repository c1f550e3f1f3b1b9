#include "stnhcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stnhcl/error.hpp"

namespace stnhcl::metrics {

using numeric::Tensor;

template <class T>
Tensor<double> grayscale(const Tensor<T>& image) {
    if (image.rank() == 2) return image.template cast<double>();
    if (image.rank() != 3 || image.dim(0) != 3) throw DimensionError("grayscale expects [3, h, w] or [h, w]");
    const std::size_t h = image.dim(1), w = image.dim(2);
    Tensor<double> out({h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            out.at(y, x) = 0.299 * image.at(0, y, x) + 0.587 * image.at(1, y, x) + 0.114 * image.at(2, y, x);
    return out;
}

template <class T>
double css(const Tensor<T>& a, const Tensor<T>& b, const CssOptions& opt) {
    if (a.shape() != b.shape()) {
        throw ContractError("css: image extents differ (" + numeric::shape_str(a.shape()) + " vs " +
                            numeric::shape_str(b.shape()) + ")");
    }
    const auto ga = grayscale(a), gb = grayscale(b);
    const std::size_t h = ga.dim(0), w = ga.dim(1), win = opt.window;
    if (win == 0 || h < win || w < win) throw ContractError("css: image smaller than the window");
    const double n = static_cast<double>(win * win);
    double total = 0.0;
    for (std::size_t y = 0; y + win <= h; ++y)
        for (std::size_t x = 0; x + win <= w; ++x) {
            double ma = 0, mb = 0;
            for (std::size_t dy = 0; dy < win; ++dy)
                for (std::size_t dx = 0; dx < win; ++dx) {
                    ma += ga.at(y + dy, x + dx);
                    mb += gb.at(y + dy, x + dx);
                }
            ma /= n;
            mb /= n;
            double va = 0, vb = 0, cov = 0;
            for (std::size_t dy = 0; dy < win; ++dy)
                for (std::size_t dx = 0; dx < win; ++dx) {
                    const double da = ga.at(y + dy, x + dx) - ma, db = gb.at(y + dy, x + dx) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va /= n;
            vb /= n;
            cov /= n;
            const double sa = std::sqrt(va), sb = std::sqrt(vb);
            const double contrast = (2.0 * sa * sb + opt.c2) / (va + vb + opt.c2);
            const double structure = (cov + opt.c3) / (sa * sb + opt.c3);
            total += contrast * structure;
        }
    return total / static_cast<double>((h - win + 1) * (w - win + 1));
}

CssReport summarize(std::vector<double> values) {
    CssReport r;
    if (!values.empty()) r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    r.values = std::move(values);
    return r;
}

template <class T>
double background_whiteness(const Tensor<T>& image, const Tensor<T>& mask) {
    if (image.rank() != 3 || image.dim(0) != 3 || mask.rank() != 2 || mask.dim(0) != image.dim(1) ||
        mask.dim(1) != image.dim(2)) {
        throw ContractError("background_whiteness: mask " + numeric::shape_str(mask.shape()) +
                            " not aligned with image " + numeric::shape_str(image.shape()));
    }
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y < mask.dim(0); ++y)
        for (std::size_t x = 0; x < mask.dim(1); ++x) {
            if (mask.at(y, x) != T(0)) continue;
            total += std::min({image.at(0, y, x), image.at(1, y, x), image.at(2, y, x)});
            ++count;
        }
    if (count == 0) throw ContractError("background_whiteness: mask has no background pixels");
    return total / static_cast<double>(count);
}

template Tensor<double> grayscale(const Tensor<float>&);
template Tensor<double> grayscale(const Tensor<double>&);
template double css(const Tensor<float>&, const Tensor<float>&, const CssOptions&);
template double css(const Tensor<double>&, const Tensor<double>&, const CssOptions&);
template double background_whiteness(const Tensor<float>&, const Tensor<float>&);
template double background_whiteness(const Tensor<double>&, const Tensor<double>&);

}  // namespace stnhcl::metrics
