#pragma once

// Parameters of the HVDC-connected offshore wind benchmark and the gains of
// its three controllers.

#include "gfm/acpower.hpp"
#include "gfm/control.hpp"
#include "gfm/plant.hpp"

namespace gfm {

struct OnshoreParams {
    double U_N{};    // V, line-to-line rms of the onshore AC grid
    double U_th{};   // V, peak phase voltage of the Thevenin source
    double R_th{};   // ohm
    double L_th{};   // H
    double P_load{}; // W, load at the Thevenin bus before any event
    plant::SyncMachineParams machine;
};

struct MmcStation {
    plant::MmcParams converter;
    double U_N{};   // V, line-to-line rms of the AC side
    double U_ac{};  // V, peak phase AC voltage setpoint
};

struct OwppParams {
    plant::WtgParams wtg;        // R_thw and L_thw are filled by offshore_wtg_params()
    double U_N{};                // V, line-to-line rms at the GSC terminal
    double U_ac{};               // V, peak phase GSC voltage setpoint
    double P_set{};              // W
    double K_Hw{};               // W s/Hz
    double K_Rw{};               // W/Hz
    double cable_length_km{};
    double cable_R_per_km{};     // ohm/km, at U_N
    double cable_L_per_km{};     // H/km, at U_N
};

struct SystemParams {
    double f_N{50.0};
    double S_N{300e6};      // VA, converter rating
    double U_dc_nom{640e3}; // V, pole-to-pole
    OnshoreParams onshore;
    MmcStation mmc_on;
    MmcStation mmc_off;
    plant::HvdcLineParams line;
    OwppParams owpp;

    double omega_N() const;
    /// Offshore MMC voltage over WTG voltage.
    double offshore_ratio() const { return mmc_off.U_N / owpp.U_N; }
    void validate() const;
};

/// Benchmark defaults, with the AC impedances calibrated to the reference gains.
SystemParams benchmark_system();

/// WTG parameters with the collector cable and the offshore MMC branch
/// referred to the GSC side as R_thw, L_thw.
plant::WtgParams offshore_wtg_params(const SystemParams& sys);

/// SI AC links used for linearization, seen from the exporting source.
/// Onshore: MMC voltage against the Thevenin source.
acpower::AcLinkParameters onshore_link(const SystemParams& sys);
/// Offshore: WTG voltage against the offshore MMC, referred to the MMC side.
acpower::AcLinkParameters offshore_link(const SystemParams& sys);
/// Offshore link referred to the GSC side.
acpower::AcLinkParameters wtg_link(const SystemParams& sys);

struct ControllerGains {
    control::MmcControllerGains mmc_on;
    control::MmcControllerGains mmc_off;
    control::WtgControllerGains wtg;
};

}  // namespace gfm
