#include "stnhcl/optimizer.hpp"

#include <cmath>

namespace stnhcl::optim {

void AdamConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

template <class T>
Adam<T>::Adam(AdamConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

template <class T>
void Adam<T>::step(ParamStore<T>& params, const std::map<std::string, numeric::Tensor<T>>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& [name, g] : grads) {
        auto it = params.find(name);
        if (it == params.end()) throw ConfigError("gradient for unknown parameter '" + name + "'");
        auto& p = it->second;
        if (p.shape() != g.shape()) throw DimensionError("gradient shape mismatch for '" + name + "'");
        auto& m = m_.try_emplace(name, numeric::Tensor<double>::zeros(p.shape())).first->second;
        auto& v = v_.try_emplace(name, numeric::Tensor<double>::zeros(p.shape())).first->second;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double gi = static_cast<double>(g[i]);
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double step = cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
            p[i] = static_cast<T>(static_cast<double>(p[i]) - step);
        }
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace stnhcl::optim
