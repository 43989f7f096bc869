#pragma once

#include <stdexcept>
#include <string>

namespace gfm {

enum class ErrorCode {
    invalid_input,
    pole_on_axis,
    no_crossover,
    improper_system,
    infeasible,
    shape,
    instability,
    divergence,
    initialization,
    metric,
    config,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code tells callers which contract failed.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gfm
