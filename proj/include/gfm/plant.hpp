#pragma once

// Continuous-time state derivatives of the physical components. Every AC
// quantity is a dq vector of peak values in a frame rotating at `omega`;
// three-phase power is 3/2 (u_d i_d + u_q i_q).

#include <array>

namespace gfm::plant {

struct Dq {
    double d{};
    double q{};
};

inline Dq operator+(Dq a, Dq b) { return {a.d + b.d, a.q + b.q}; }
inline Dq operator-(Dq a, Dq b) { return {a.d - b.d, a.q - b.q}; }
inline Dq operator*(double k, Dq a) { return {k * a.d, k * a.q}; }

/// Rotates a vector forward by angle.
Dq rotate(Dq v, double angle);
Dq polar_dq(double amplitude, double angle);
double ac_power(Dq u, Dq i);

enum class FrequencySource { fixed, machine };

struct TheveninGrid {
    double U_th{};  // V peak
    double R_th{};
    double L_th{};
    FrequencySource frequency_source{FrequencySource::fixed};
};

struct SyncMachineParams {
    double H{};        // s
    double droop{};    // p.u.
    double T_gov{};    // s
    double S_base{};   // VA
    double f_N{50.0};  // Hz
};

struct SyncMachineState {
    double delta{};
    double omega_pu{1.0};
    double P_m{};
};

struct SyncMachineDerivative {
    double delta{};
    double omega_pu{};
    double P_m{};
};

/// AC side (R_s, L_s), DC side (R_d, L_d) and equivalent capacitor of one MMC.
struct MmcParams {
    double R_s{};
    double L_s{};
    double R_d{};
    double L_d{};
    double C_eq{};
    double U_eq_nom{};
    double W_t_nom{};

    void validate() const;
};

struct MmcState {
    Dq i_s;          // A, out of the converter towards the AC grid
    double I_dc{};   // A, from the line into the converter
    double W_t{};    // J
};

struct WtgParams {
    double R_GSC{};
    double L_GSC{};
    double R_thw{};
    double L_thw{};
    double C_link{};
    double U_link_nom{};
    double T_msc{};  // s, 0 makes the machine side an ideal current source

    double R_w() const { return R_GSC + R_thw; }
    double L_w() const { return L_GSC + L_thw; }
    double W_link_nom() const { return 0.5 * C_link * U_link_nom * U_link_nom; }
    void validate() const;
};

struct WtgState {
    Dq i_w;            // A, out of the GSC
    double W_link{};   // J
    double P_MSC{};    // W
};

struct WtgDerivative {
    Dq i_w;
    double W_link{};
    double P_MSC{};
};

struct HvdcLineParams {
    double R_dc{};
    double L_dc{};
    double C_dc{};

    void validate() const;
};

/// Section 1 runs from the midpoint to the onshore node, section 2 from the
/// offshore node to the midpoint; both currents are positive in that direction.
struct HvdcLineState {
    double U_dc_on{};
    double U_mid{};
    double U_dc_off{};
    double i_sec1{};
    double i_sec2{};
};

using HvdcLineDerivative = HvdcLineState;

/// di/dt of a series R-L branch between u_from and u_to, both in the same frame.
Dq ac_branch_derivative(double R, double L, double omega, Dq i, Dq u_from, Dq u_to);

/// AC current dynamics of an MMC against a Thevenin source. u_diff_dq is given
/// in the frame of angle theta_diff; the Thevenin source at angle theta_th is
/// rotated into it. R_th and L_th are folded into the branch.
Dq mmc_ac_derivative(const MmcParams& params, const MmcState& state, Dq u_diff_dq, const TheveninGrid& grid,
                     double theta_diff, double theta_th, double omega);

double mmc_dc_derivative(const MmcParams& params, const MmcState& state, double u_sum0_cmd, double U_dc_terminal);

/// P_dc = 2 u_sum0 I_dc
double mmc_dc_power(double u_sum0, double I_dc);
double mmc_energy_derivative(double P_dc, double P_ac);
/// Equivalent-capacitor voltage for stored energy W_t.
double mmc_equivalent_voltage(const MmcParams& params, double W_t);

/// u_gsc_dq and u_thw_dq share the frame rotating at omega.
WtgDerivative wtg_derivative(const WtgParams& params, const WtgState& state, Dq u_gsc_dq, Dq u_thw_dq, double omega,
                             double P_MSC_cmd);
double wtg_link_voltage(const WtgParams& params, double W_link);

/// I_on_inject/I_off_inject flow from the converters into the end nodes.
HvdcLineDerivative hvdc_line_derivative(const HvdcLineParams& params, const HvdcLineState& state,
                                        double I_dc_on_inject, double I_dc_off_inject);
double hvdc_line_charge(const HvdcLineParams& params, const HvdcLineState& state);
/// Energy stored in the line capacitors and inductors.
double hvdc_line_energy(const HvdcLineParams& params, const HvdcLineState& state);

SyncMachineDerivative sync_machine_derivative(const SyncMachineParams& params, const SyncMachineState& state,
                                              double P_e, double P_set);

}  // namespace gfm::plant
