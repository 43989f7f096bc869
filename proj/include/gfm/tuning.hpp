#pragma once

// Closed-form loop-shaping rules for the energy, DC current and DC voltage
// loops, and the reports that check them.

#include "gfm/acpower.hpp"
#include "gfm/linsys.hpp"
#include "gfm/system.hpp"

#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace gfm::tuning {

using linsys::RationalTransferFunction;

struct TuningInputs {
    double omega_N{2.0 * std::numbers::pi * 50.0};  // rad/s
    double omega_s{10000.0};   // rad/s, controller sampling
    double omega_idc{1000.0};  // rad/s, DC current loop bandwidth
    double h_ac_on{5.0};
    double h_ac_off{5.0};
    double h_ac_w{15.0};
    double h_dc{4.0};
    double R_v_pu{0.2};
    double T_v_on{0.021};      // s
    double T_v_off{0.017};     // s
    double T_vw{0.015};        // s
    double delta_U_dcm{19.2e3};  // V
    double delta_f_m_on{0.5};    // Hz
    double delta_f_m_off{0.5};   // Hz

    void validate() const;
};

acpower::VirtualResistanceParams default_virtual_resistance(double omega_N, double Z_base);

struct EnergyGains {
    double K_H{};  // Hz/J
    double K_D{};  // rad/Hz
};

EnergyGains tune_energy_loop(double h, double gpac_dc_gain, double omega_N);

/// K_H (2 pi + K_D s)/s^2 G_Pac(s).
RationalTransferFunction build_gnrg(double K_H, double K_D, const RationalTransferFunction& gpac);

struct ResponseTargets {
    linsys::TimeSeries y_ac_ac;
    linsys::TimeSeries y_dc_ac;
    linsys::StepMetrics ac_ac_metrics;  // final value 1/(2 pi K_H): steady dW per rad/s of frequency offset
    linsys::StepMetrics dc_ac_metrics;
};

/// Ramp response of (G_Pac/s)/(1 + G_nrg) and step response of G_nrg/(1 + G_nrg).
ResponseTargets response_targets(const RationalTransferFunction& gnrg, const RationalTransferFunction& gpac,
                                 double t_end, double dt);

struct PiGains {
    double K_p{};
    double K_i{};
};

struct DcCurrentTuning {
    PiGains gains;
    bool above_sampling_limit{false};  // omega_idc > omega_s / 10
};

DcCurrentTuning tune_dc_current(double L_d, double R_d, double omega_idc, double omega_s);

/// Closed current loop with the tuned PI: (K_p s + K_i)/(L_d s^2 + (R_d + K_p) s + K_i).
RationalTransferFunction dc_current_closed_loop(double L_d, double R_d, const PiGains& g);

RationalTransferFunction design_compensator(double C_dc, double L_dc, double R_dc, double omega_idc);

PiGains tune_dc_voltage(double C_dc, double omega_idc, double h);

/// Reduced DC voltage open loop as printed.
RationalTransferFunction build_gudc(const PiGains& g, double C_dc, double omega_idc);

/// PI * G_cmp * first-order current loop * line, without cancelling factors.
RationalTransferFunction assemble_gudc(const PiGains& g, double C_dc, double L_dc, double R_dc, double omega_idc);

/// max |a.num*b.den - b.num*a.den| coefficient over the largest coefficient;
/// zero when a and b are the same rational function.
double tf_mismatch(const RationalTransferFunction& a, const RationalTransferFunction& b);

double tune_droop(double delta_U_dcm, double delta_f_m);

struct BandwidthBounds {
    double ac{};  // rad/s
    double dc{};  // rad/s
};

BandwidthBounds bandwidth_bounds(double omega_N, double omega_s, double h_ac, double h_dc);

struct LoopReport {
    std::string name;
    RationalTransferFunction open_loop{linsys::Polynomial{1.0}, linsys::Polynomial{1.0}};
    double omega_L{};  // rad/s
    double omega_H{};  // rad/s
    linsys::StabilityMargins margins;
    double crossover_placement_error{};  // (omega_c - sqrt(omega_L omega_H)) / sqrt(omega_L omega_H)
};

/// Margins of an open loop shaped between omega_L and omega_H.
LoopReport analyse_loop(std::string name, RationalTransferFunction open_loop, double omega_L, double omega_H);

struct TuningReport {
    TuningInputs inputs;
    ControllerGains gains;
    double gpac_dc_gain_on{};   // W/rad
    double gpac_dc_gain_off{};
    double gpac_dc_gain_w{};
    double delta_on{};          // rad, dispatch operating angles
    double delta_off{};
    double delta_w{};
    std::vector<LoopReport> loops;  // gnrg_on, gnrg_off, gnrg_wtg, gudc
    BandwidthBounds bounds;
    double gudc_assembly_mismatch{};
    std::vector<std::string> warnings;

    const LoopReport& loop(const std::string& name) const;
};

/// G_Pac in W/rad of a link at the dispatch power, with the virtual resistance.
RationalTransferFunction link_gpac(const acpower::AcLinkParameters& link_si, double P, double U_N, double S_N,
                                   double f_N, double R_v, double T_v, double* delta_out = nullptr);

/// Full pipeline at the dispatch operating point of `sys`. Frequency-response
/// gains of the OWPP (K_Hw, K_Rw) are copied from the system parameters.
TuningReport tune_system(const SystemParams& sys, const TuningInputs& in);

/// Rebuilds the loop reports for a given gain set (used on gains read from a file).
std::vector<LoopReport> analyse_gains(const SystemParams& sys, const TuningInputs& in, const ControllerGains& g);

/// Human-readable report: margins, crossover placement, bounds and warnings.
std::string format_report(const TuningReport& r);

}  // namespace gfm::tuning
