#pragma once

// INI-style configuration documents and the flat gains file.
//
// Config sections: [system], [system.onshore], [system.mmc_on],
// [system.mmc_off], [system.hvdc_line], [system.owpp], [tuning], [scenario].
// Missing keys keep the benchmark defaults; unknown keys are errors.

#include "gfm/sim.hpp"
#include "gfm/system.hpp"
#include "gfm/tuning.hpp"

#include <iosfwd>
#include <string>

namespace gfm::config {

struct Config {
    SystemParams sys = benchmark_system();
    tuning::TuningInputs tuning;
    sim::Scenario scenario = sim::benchmark_scenario(benchmark_system());
    sim::FrequencyPreset preset{sim::FrequencyPreset::none};
};

/// Throws Error(config) naming the source, line and key.
Config parse_config(std::istream& is, const std::string& source = "<config>");
/// Empty path gives the defaults.
Config load_config(const std::string& path);
/// Every key with its unit; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const Config& c);

std::string format_events(const std::vector<sim::Event>& events);
std::vector<sim::Event> parse_events(const std::string& text);

struct GainsFile {
    ControllerGains gains;
    tuning::TuningInputs inputs;  // provenance
    double P_set{};               // W, operating point the gains were tuned at
    double delta_on{};            // rad
    double delta_off{};
    double delta_w{};
};

GainsFile gains_file_from(const tuning::TuningReport& r, const SystemParams& sys);
std::string serialize_gains(const GainsFile& g);
GainsFile parse_gains(std::istream& is, const std::string& source = "<gains>");
GainsFile load_gains(const std::string& path);

/// Gains-file key such as "wtg.K_Rw" or "mmc_on.K_D"; nullptr when unknown.
double* gain_field(ControllerGains& g, const std::string& key);
/// [tuning] key such as "h_dc"; nullptr when unknown.
double* tuning_field(tuning::TuningInputs& in, const std::string& key);

/// Writes to a temporary file next to `path` and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace gfm::config
