#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "stnhcl/params.hpp"

namespace stnhcl::optim {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Bias-corrected Adam:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Moments are kept per parameter name; parameters without a gradient entry
/// are left untouched.
template <class T>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {});

    void step(ParamStore<T>& params, const std::map<std::string, numeric::Tensor<T>>& grads);
    std::uint64_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::map<std::string, numeric::Tensor<double>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace stnhcl::optim
