#pragma once

// gfmsim commands. Each returns a process exit code; argument parsing lives
// in tools/gfmsim.cpp.

#include "gfm/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gfm::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,       // runtime error other than the ones below
    exit_usage = 2,         // bad flags, config or gains file
    exit_divergence = 3,
    exit_verification = 4,
};

struct Options {
    std::string config;      // empty: benchmark defaults
    std::string out;         // primary output file; empty writes to the text stream
    std::string gains;       // gains file; empty retunes from the config
    std::string metrics;     // simulate: metrics JSON
    std::string scenario{"custom"};  // fcr | inertia | custom
    std::string loop;        // bode: gnrg_on | gnrg_off | gnrg_wtg | gudc
    std::string param;       // sweep
    std::vector<double> values;
    int jobs{1};
    std::optional<double> dt;
    bool seedless{false};    // accepted, nothing is random
};

int cmd_tune(const Options& o, std::ostream& out, std::ostream& err);
int cmd_bode(const Options& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err);
int cmd_verify(const Options& o, std::ostream& out, std::ostream& err);
int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err);

/// Parses "1,2.5,3e6"; throws Error(config) on a bad entry.
std::vector<double> parse_value_list(const std::string& text);

/// Reads GFMSIM_LOG (trace, debug, info, warn, error, off) into spdlog.
void configure_logging();

}  // namespace gfm::cli
