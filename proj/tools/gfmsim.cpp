// gfmsim: tune, inspect and simulate the HVDC-connected offshore wind plant.

#include "gfm/cli.hpp"
#include "gfm/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void common_flags(CLI::App* cmd, gfm::cli::Options& o) {
    cmd->add_option("--config", o.config, "INI configuration (benchmark defaults when omitted)");
    cmd->add_flag("--seedless", o.seedless, "Reserved; the tool uses no randomness");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace gfm::cli;
    configure_logging();

    CLI::App app{"Holistic grid-forming control of an HVDC-connected offshore wind power plant"};
    app.require_subcommand(1);
    Options o;
    std::string values;

    auto* tune = app.add_subcommand("tune", "Run the tuning pipeline and write a gains file");
    common_flags(tune, o);
    tune->add_option("--out", o.out, "Gains file (printed when omitted)");

    auto* bode = app.add_subcommand("bode", "Bode CSV of one open loop with a margins footer");
    common_flags(bode, o);
    bode->add_option("--loop", o.loop, "gnrg_on, gnrg_off, gnrg_wtg or gudc")->required();
    bode->add_option("--gains", o.gains, "Gains file (retuned from the config when omitted)");
    bode->add_option("--out", o.out, "CSV path (stdout when omitted)");

    auto* simulate = app.add_subcommand("simulate", "Run a scenario and report metrics and invariants");
    common_flags(simulate, o);
    simulate->add_option("--scenario", o.scenario, "fcr, inertia or custom")->capture_default_str();
    simulate->add_option("--gains", o.gains, "Gains file (retuned from the config when omitted)");
    simulate->add_option("--out", o.out, "Time-series CSV");
    simulate->add_option("--metrics", o.metrics, "Metrics JSON (stdout when omitted)");
    simulate->add_option("--dt", o.dt, "Step size in seconds");

    auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
    common_flags(verify, o);
    verify->add_option("--gains", o.gains, "Gains file used in place of the tuned gains");
    verify->add_option("--out", o.out, "Also write the suite report here");
    verify->add_option("--dt", o.dt, "Step size in seconds");
    verify->add_option("--jobs", o.jobs, "Parallel scenario runs")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Simulate once per parameter value");
    common_flags(sweep, o);
    sweep->add_option("--param", o.param, "Gain (K_Rw, wtg.K_Hw, mmc_on.K_D, ...) or tuning input (h_ac, h_dc, ...)")
        ->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--scenario", o.scenario, "fcr, inertia or custom")->capture_default_str();
    sweep->add_option("--gains", o.gains, "Gains file (retuned from the config when omitted)");
    sweep->add_option("--out", o.out, "CSV path (stdout when omitted)");
    sweep->add_option("--dt", o.dt, "Step size in seconds");
    sweep->add_option("--jobs", o.jobs, "Parallel scenario runs")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (*tune) return cmd_tune(o, std::cout, std::cerr);
    if (*bode) return cmd_bode(o, std::cout, std::cerr);
    if (*simulate) return cmd_simulate(o, std::cout, std::cerr);
    if (*verify) return cmd_verify(o, std::cout, std::cerr);
    try {
        o.values = parse_value_list(values);
    } catch (const gfm::Error& e) {
        std::cerr << "gfmsim: " << e.what() << "\n";
        return exit_usage;
    }
    return cmd_sweep(o, std::cout, std::cerr);
}
