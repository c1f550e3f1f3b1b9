#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stnhcl/numeric/gradcheck.hpp"

// Finite-difference checks of every differentiable operation, the loss
// building blocks and the end-to-end encoder -> contrastive -> total-loss
// pipelines, all in 64-bit.
namespace stnhcl::gradcheck {

struct SuiteOptions {
    double eps = 1e-4;
    double tolerance = 1e-4;
    // Coordinates checked per input tensor of the full-generator case (0 = all).
    std::size_t generator_coords = 16;
};

struct Case {
    std::string name;
    std::function<numeric::GradCheckReport(const SuiteOptions&)> run;
};

std::vector<Case> default_cases();

struct SuiteResult {
    std::vector<numeric::GradCheckReport> reports;
    double seconds = 0.0;
    bool passed = false;
};

// Runs the cases whose name contains `filter` (all when empty).
SuiteResult run_suite(const std::vector<Case>& cases, const SuiteOptions& opt = {}, const std::string& filter = {});

std::string format_table(const SuiteResult& result);

}  // namespace stnhcl::gradcheck
