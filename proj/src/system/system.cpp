#include "gfm/system.hpp"

#include "gfm/error.hpp"

#include <cmath>
#include <numbers>

namespace gfm {

namespace {

// arm reactor and resistance of both MMCs; L_d = 2 L_a/3, R_d = 2 R_a/3
constexpr double kArmL = 0.195;
constexpr double kArmR = 3.072;
// converter transformer, per unit on the AC-side base
constexpr double kTrafoX = 0.12;
constexpr double kTrafoR = 0.005;

MmcStation make_station(double S_N, double U_N, double f_N) {
    const auto b = acpower::per_unit_base(S_N, U_N, f_N);
    MmcStation st;
    st.U_N = U_N;
    st.U_ac = b.U_b;
    auto& c = st.converter;
    c.L_s = 0.5 * kArmL + kTrafoX * b.L_b;
    c.R_s = 0.5 * kArmR + kTrafoR * b.Z_b;
    c.L_d = 2.0 * kArmL / 3.0;
    c.R_d = 2.0 * kArmR / 3.0;
    c.U_eq_nom = 640e3;
    c.W_t_nom = 9e6;
    c.C_eq = 2.0 * c.W_t_nom / (c.U_eq_nom * c.U_eq_nom);
    return st;
}

}  // namespace

double SystemParams::omega_N() const { return 2.0 * std::numbers::pi * f_N; }

void SystemParams::validate() const {
    if (!(f_N > 0.0) || !(S_N > 0.0) || !(U_dc_nom > 0.0)) {
        throw Error(ErrorCode::invalid_input, "f_N, S_N and U_dc_nom must be > 0");
    }
    if (!(onshore.U_N > 0.0) || !(onshore.U_th > 0.0) || !(onshore.R_th >= 0.0) || !(onshore.L_th >= 0.0)) {
        throw Error(ErrorCode::invalid_input, "onshore grid parameters out of range");
    }
    const auto& m = onshore.machine;
    if (!(m.H > 0.0) || !(m.droop > 0.0 && m.droop <= 1.0) || !(m.T_gov > 0.0) || !(m.S_base > 0.0)) {
        throw Error(ErrorCode::invalid_input, "onshore machine needs H > 0, 0 < droop <= 1, T_gov > 0, S_base > 0");
    }
    mmc_on.converter.validate();
    mmc_off.converter.validate();
    if (!(mmc_on.U_N > 0.0) || !(mmc_off.U_N > 0.0) || !(mmc_on.U_ac > 0.0) || !(mmc_off.U_ac > 0.0)) {
        throw Error(ErrorCode::invalid_input, "MMC AC voltages must be > 0");
    }
    line.validate();
    offshore_wtg_params(*this).validate();
    if (!(owpp.U_N > 0.0) || !(owpp.U_ac > 0.0) || !(owpp.P_set >= 0.0) || !(owpp.K_Hw >= 0.0) ||
        !(owpp.K_Rw >= 0.0) || !(owpp.cable_length_km >= 0.0)) {
        throw Error(ErrorCode::invalid_input, "OWPP parameters out of range");
    }
}

SystemParams benchmark_system() {
    SystemParams s;
    s.f_N = 50.0;
    s.S_N = 300e6;
    s.U_dc_nom = 640e3;

    s.mmc_on = make_station(s.S_N, 263e3, s.f_N);
    s.mmc_off = make_station(s.S_N, 279e3, s.f_N);

    auto& on = s.onshore;
    on.U_N = 263e3;
    on.U_th = acpower::per_unit_base(s.S_N, on.U_N, s.f_N).U_b;
    // calibrated so that G_Pac(0) at 0.8 p.u. gives the tabulated K_H,on
    on.L_th = 0.0557;
    on.R_th = 1.75;
    on.P_load = 900e6;
    on.machine = {2.0, 0.05, 0.5, 1800e6, s.f_N};

    // line values invert the DC-voltage gains and the compensator polynomial
    s.line = {4.375, 0.0729, 4.8e-5};

    auto& w = s.owpp;
    w.U_N = 60e3;
    w.U_ac = acpower::per_unit_base(s.S_N, w.U_N, s.f_N).U_b;
    w.P_set = 240e6;
    w.wtg.R_GSC = 0.019;
    w.wtg.L_GSC = 3e-3;
    w.wtg.C_link = 5.17e-3;
    w.wtg.U_link_nom = 132e3;
    w.wtg.T_msc = 0.05;
    w.cable_R_per_km = 0.028;
    w.cable_L_per_km = 0.45e-3;
    // calibrated so that G_Pac(0) at 0.8 p.u. gives the tabulated K_H,off
    w.cable_length_km = 6.4;
    w.K_Hw = 0.0;
    w.K_Rw = 0.0;
    return s;
}

plant::WtgParams offshore_wtg_params(const SystemParams& sys) {
    plant::WtgParams p = sys.owpp.wtg;
    const double n = sys.offshore_ratio();
    const auto& c = sys.mmc_off.converter;
    p.R_thw = sys.owpp.cable_R_per_km * sys.owpp.cable_length_km + c.R_s / (n * n);
    p.L_thw = sys.owpp.cable_L_per_km * sys.owpp.cable_length_km + c.L_s / (n * n);
    return p;
}

acpower::AcLinkParameters onshore_link(const SystemParams& sys) {
    acpower::AcLinkParameters p;
    p.R = sys.mmc_on.converter.R_s + sys.onshore.R_th;
    p.L = sys.mmc_on.converter.L_s + sys.onshore.L_th;
    p.omega1 = sys.omega_N();
    p.U = sys.mmc_on.U_ac;
    p.E = sys.onshore.U_th;
    p.unit_system = acpower::UnitSystem::si;
    return p;
}

acpower::AcLinkParameters wtg_link(const SystemParams& sys) {
    const auto w = offshore_wtg_params(sys);
    acpower::AcLinkParameters p;
    p.R = w.R_w();
    p.L = w.L_w();
    p.omega1 = sys.omega_N();
    p.U = sys.owpp.U_ac;
    p.E = sys.mmc_off.U_ac / sys.offshore_ratio();
    p.unit_system = acpower::UnitSystem::si;
    return p;
}

acpower::AcLinkParameters offshore_link(const SystemParams& sys) {
    const double n = sys.offshore_ratio();
    auto p = wtg_link(sys);
    p.R *= n * n;
    p.L *= n * n;
    p.U *= n;
    p.E *= n;
    return p;
}

}  // namespace gfm
