#include "gfm/error.hpp"

namespace gfm {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_input: return "invalid-input";
        case ErrorCode::pole_on_axis: return "pole-on-axis";
        case ErrorCode::no_crossover: return "no-crossover";
        case ErrorCode::improper_system: return "improper-system";
        case ErrorCode::infeasible: return "infeasible";
        case ErrorCode::shape: return "shape";
        case ErrorCode::instability: return "instability";
        case ErrorCode::divergence: return "divergence";
        case ErrorCode::initialization: return "initialization";
        case ErrorCode::metric: return "metric";
        case ErrorCode::config: return "config";
    }
    return "unknown";
}

}  // namespace gfm
