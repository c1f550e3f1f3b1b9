#pragma once

#include <cstdint>
#include <vector>

namespace stnhcl::numeric {

/// While alive, collects on the current thread the sign of every input
/// element of the piecewise-linear activations (relu, leaky_relu), in
/// evaluation order. Two evaluations with equal patterns lie on the same
/// linear piece, so a central difference between them is valid.
class KinkRecorder {
public:
    KinkRecorder();
    ~KinkRecorder();
    KinkRecorder(const KinkRecorder&) = delete;
    KinkRecorder& operator=(const KinkRecorder&) = delete;

    const std::vector<bool>& pattern() const noexcept { return pattern_; }
    void push(bool positive) { pattern_.push_back(positive); }

    // Innermost recorder of this thread, or nullptr.
    static KinkRecorder* current() noexcept;

private:
    std::vector<bool> pattern_;
    KinkRecorder* previous_;
};

}  // namespace stnhcl::numeric
