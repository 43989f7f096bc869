#pragma once

// The acceptance suite: one pass/fail verdict per criterion A1-A11, shared by
// the acceptance binary and `gfmsim verify`.

#include "gfm/system.hpp"
#include "gfm/tuning.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gfm::acceptance {

struct Criterion {
    std::string id;     // "A1" .. "A11"
    std::string title;
    bool pass{false};
    std::string detail;
    double seconds{};   // wall time spent on this criterion
};

struct SuiteOptions {
    SystemParams sys = benchmark_system();
    tuning::TuningInputs inputs;
    /// Replaces the tuned gains everywhere after A1's pipeline run (negative tests).
    std::optional<ControllerGains> gains;
    double dt{50e-6};
    int jobs{1};
};

struct SuiteReport {
    std::vector<Criterion> criteria;
    bool pass() const;
};

SuiteReport run_suite(const SuiteOptions& opts);

/// "A1   PASS  tuning reproduction  (0.01 s)  K_D = 0.1 ..."
std::string format_line(const Criterion& c);

}  // namespace gfm::acceptance
