#include "gfm/plant.hpp"

#include "gfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gfm::plant {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_input, what);
}

}  // namespace

Dq rotate(Dq v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.d - s * v.q, s * v.d + c * v.q};
}

Dq polar_dq(double amplitude, double angle) { return {amplitude * std::cos(angle), amplitude * std::sin(angle)}; }

double ac_power(Dq u, Dq i) { return 1.5 * (u.d * i.d + u.q * i.q); }

void MmcParams::validate() const {
    require(R_s >= 0 && L_s > 0 && R_d >= 0 && L_d > 0 && C_eq > 0 && U_eq_nom > 0 && W_t_nom > 0,
            "MMC parameters must be positive");
    require(std::abs(W_t_nom - 0.5 * C_eq * U_eq_nom * U_eq_nom) <= 1e-9 * W_t_nom,
            "MMC W_t_nom must equal C_eq U_eq_nom^2 / 2");
}

void WtgParams::validate() const {
    require(R_GSC >= 0 && L_GSC > 0 && R_thw >= 0 && L_thw >= 0 && C_link > 0 && U_link_nom > 0 && T_msc >= 0,
            "WTG parameters must be positive");
}

void HvdcLineParams::validate() const {
    require(R_dc >= 0 && L_dc > 0 && C_dc > 0, "HVDC line needs R_dc >= 0, L_dc > 0, C_dc > 0");
}

Dq ac_branch_derivative(double R, double L, double omega, Dq i, Dq u_from, Dq u_to) {
    return {(u_from.d - u_to.d - R * i.d + omega * L * i.q) / L, (u_from.q - u_to.q - R * i.q - omega * L * i.d) / L};
}

Dq mmc_ac_derivative(const MmcParams& p, const MmcState& s, Dq u_diff_dq, const TheveninGrid& g, double theta_diff,
                     double theta_th, double omega) {
    const Dq u_grid = polar_dq(g.U_th, theta_th - theta_diff);
    return ac_branch_derivative(p.R_s + g.R_th, p.L_s + g.L_th, omega, s.i_s, u_diff_dq, u_grid);
}

double mmc_dc_derivative(const MmcParams& p, const MmcState& s, double u_sum0_cmd, double U_dc_terminal) {
    return (-2.0 * u_sum0_cmd + U_dc_terminal - p.R_d * s.I_dc) / p.L_d;
}

double mmc_dc_power(double u_sum0, double I_dc) { return 2.0 * u_sum0 * I_dc; }

double mmc_energy_derivative(double P_dc, double P_ac) { return P_dc - P_ac; }

double mmc_equivalent_voltage(const MmcParams& p, double W_t) { return std::sqrt(2.0 * std::max(W_t, 0.0) / p.C_eq); }

WtgDerivative wtg_derivative(const WtgParams& p, const WtgState& s, Dq u_gsc_dq, Dq u_thw_dq, double omega,
                             double P_MSC_cmd) {
    WtgDerivative d;
    d.i_w = ac_branch_derivative(p.R_w(), p.L_w(), omega, s.i_w, u_gsc_dq, u_thw_dq);
    d.W_link = s.P_MSC - ac_power(u_gsc_dq, s.i_w);
    d.P_MSC = p.T_msc > 0.0 ? (P_MSC_cmd - s.P_MSC) / p.T_msc : 0.0;
    return d;
}

double wtg_link_voltage(const WtgParams& p, double W_link) { return std::sqrt(2.0 * std::max(W_link, 0.0) / p.C_link); }

HvdcLineDerivative hvdc_line_derivative(const HvdcLineParams& p, const HvdcLineState& s, double I_on, double I_off) {
    const double C_end = 0.25 * p.C_dc, C_mid = 0.5 * p.C_dc;
    const double L_sec = 0.5 * p.L_dc, R_sec = 0.5 * p.R_dc;
    HvdcLineDerivative d;
    d.U_dc_on = (I_on + s.i_sec1) / C_end;
    d.U_mid = (s.i_sec2 - s.i_sec1) / C_mid;
    d.U_dc_off = (I_off - s.i_sec2) / C_end;
    d.i_sec1 = (s.U_mid - s.U_dc_on - R_sec * s.i_sec1) / L_sec;
    d.i_sec2 = (s.U_dc_off - s.U_mid - R_sec * s.i_sec2) / L_sec;
    return d;
}

double hvdc_line_charge(const HvdcLineParams& p, const HvdcLineState& s) {
    return 0.25 * p.C_dc * (s.U_dc_on + s.U_dc_off) + 0.5 * p.C_dc * s.U_mid;
}

double hvdc_line_energy(const HvdcLineParams& p, const HvdcLineState& s) {
    const double ce = 0.125 * p.C_dc, cm = 0.25 * p.C_dc, l = 0.25 * p.L_dc;
    return ce * (s.U_dc_on * s.U_dc_on + s.U_dc_off * s.U_dc_off) + cm * s.U_mid * s.U_mid +
           l * (s.i_sec1 * s.i_sec1 + s.i_sec2 * s.i_sec2);
}

SyncMachineDerivative sync_machine_derivative(const SyncMachineParams& p, const SyncMachineState& s, double P_e,
                                              double P_set) {
    const double dw = s.omega_pu - 1.0;
    SyncMachineDerivative d;
    d.delta = dw * 2.0 * std::numbers::pi * p.f_N;
    d.omega_pu = (s.P_m - P_e) / p.S_base / (2.0 * p.H);
    d.P_m = ((P_set - dw * p.S_base / p.droop) - s.P_m) / p.T_gov;
    return d;
}

}  // namespace gfm::plant
