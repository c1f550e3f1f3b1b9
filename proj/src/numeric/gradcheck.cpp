#include "stnhcl/numeric/gradcheck.hpp"

namespace stnhcl::numeric {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
}

namespace {
thread_local KinkRecorder* active_recorder = nullptr;
}

KinkRecorder::KinkRecorder() : previous_(active_recorder) { active_recorder = this; }
KinkRecorder::~KinkRecorder() { active_recorder = previous_; }
KinkRecorder* KinkRecorder::current() noexcept { return active_recorder; }

}  // namespace stnhcl::numeric
