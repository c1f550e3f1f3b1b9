#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stnhcl/numeric/graph.hpp"
#include "stnhcl/numeric/kinks.hpp"

namespace stnhcl::numeric {

struct GradCheckOptions {
    double eps = 1e-5;
    double tolerance = 1e-6;
    // Analytic gradient computed in 32-bit; the finite-difference reference is
    // always evaluated in 64-bit.
    bool analytic_f32 = false;
    // Check at most this many evenly strided coordinates per input (0 = all).
    std::size_t max_coords_per_input = 0;
    // Coordinates whose +eps and -eps evaluations fall on different linear
    // pieces of a relu/leaky_relu are not comparable and are skipped; the
    // check fails if more than this fraction is skipped.
    double max_skipped_fraction = 0.05;
};

struct GradCheckReport {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::size_t coords_skipped = 0;  // straddled an activation kink
    bool passed = false;
};

// |a - n| / max(1, |a|, |n|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of a scalar function against central
/// differences. `build(graph, vars)` must be callable for Graph<float> and
/// Graph<double> and return the scalar loss; `vars` are leaves holding
/// `inputs` in input order.
template <class Builder>
GradCheckReport check_gradients(std::string name, const std::vector<Tensor<double>>& inputs, Builder&& build,
                                const GradCheckOptions& opt = {}) {
    // Loss value plus the activation sign pattern of the evaluation.
    auto evaluate = [&](const std::vector<Tensor<double>>& xs) {
        KinkRecorder kinks;
        Graph<double> g;
        std::vector<Var<double>> vars;
        for (const auto& x : xs) vars.push_back(g.constant(x));
        const auto value = static_cast<double>(build(g, vars).value().item());
        return std::pair{value, kinks.pattern()};
    };

    auto analytic = [&]<class T>(T) {
        Graph<T> g;
        std::vector<Var<T>> vars;
        for (const auto& x : inputs) {
            auto t = x.template cast<T>();
            t.set_requires_grad(true);
            vars.push_back(g.leaf(std::move(t)));
        }
        auto loss = build(g, vars);
        auto grads = g.backward(loss);
        std::vector<Tensor<double>> out;
        for (auto v : vars) out.push_back(grads.of(v).template cast<double>());
        return out;
    };
    const auto grads = opt.analytic_f32 ? analytic(0.0f) : analytic(0.0);

    GradCheckReport report;
    report.name = std::move(name);
    auto xs = inputs;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const std::size_t n = xs[t].numel();
        const std::size_t step =
            (opt.max_coords_per_input == 0 || n <= opt.max_coords_per_input) ? 1 : n / opt.max_coords_per_input;
        for (std::size_t i = 0; i < n; i += step) {
            const double orig = xs[t][i];
            xs[t][i] = orig + opt.eps;
            const auto [up, up_kinks] = evaluate(xs);
            xs[t][i] = orig - opt.eps;
            const auto [down, down_kinks] = evaluate(xs);
            xs[t][i] = orig;
            if (up_kinks != down_kinks) {
                ++report.coords_skipped;
                continue;
            }
            const double numeric = (up - down) / (2.0 * opt.eps);
            const double err = relative_error(grads[t][i], numeric);
            report.max_rel_error = std::isfinite(err) ? std::max(report.max_rel_error, err) : INFINITY;
            ++report.coords_checked;
        }
    }
    const double total = static_cast<double>(report.coords_checked + report.coords_skipped);
    report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error < opt.tolerance &&
                    report.coords_checked > 0 &&
                    static_cast<double>(report.coords_skipped) <= opt.max_skipped_fraction * total;
    return report;
}

}  // namespace stnhcl::numeric
