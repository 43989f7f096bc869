#include "gfm/tuning.hpp"

#include "gfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace gfm::tuning {

using linsys::Polynomial;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_input, what);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

void TuningInputs::validate() const {
    require(omega_N > 0.0 && omega_s > 0.0 && omega_idc > 0.0, "tuning: omega_N, omega_s, omega_idc must be > 0");
    require(h_ac_on > 1.0 && h_ac_off > 1.0 && h_ac_w > 1.0 && h_dc > 1.0, "tuning: every h must be > 1");
    require(R_v_pu >= 0.0, "tuning: R_v_pu must be >= 0");
    require(T_v_on > 0.0 && T_v_off > 0.0 && T_vw > 0.0, "tuning: T_v values must be > 0");
    require(delta_U_dcm > 0.0 && delta_f_m_on > 0.0 && delta_f_m_off > 0.0,
            "tuning: delta_U_dcm and delta_f_m must be > 0");
}

acpower::VirtualResistanceParams default_virtual_resistance(double omega_N, double Z_base) {
    require(omega_N > 0.0 && Z_base > 0.0, "default_virtual_resistance: inputs must be > 0");
    return {0.2 * Z_base, 7.5 / omega_N};
}

EnergyGains tune_energy_loop(double h, double gpac_dc_gain, double omega_N) {
    require(h > 1.0, "tune_energy_loop: h must be > 1");
    require(gpac_dc_gain > 0.0, "tune_energy_loop: G_Pac(0) must be > 0");
    require(omega_N > 0.0, "tune_energy_loop: omega_N must be > 0");
    return {omega_N * omega_N / (kTwoPi * gpac_dc_gain * std::pow(h, 1.5)), kTwoPi * h / omega_N};
}

RationalTransferFunction build_gnrg(double K_H, double K_D, const RationalTransferFunction& gpac) {
    require(K_H > 0.0 && K_D >= 0.0, "build_gnrg: need K_H > 0, K_D >= 0");
    const RationalTransferFunction ctrl(Polynomial{K_H * kTwoPi, K_H * K_D}, Polynomial::monomial(2));
    return linsys::series(ctrl, gpac);
}

ResponseTargets response_targets(const RationalTransferFunction& gnrg, const RationalTransferFunction& gpac,
                                  double t_end, double dt) {
    const Polynomial char_poly = gnrg.den() + gnrg.num();
    const RationalTransferFunction closed(gnrg.num(), char_poly);
    if (!linsys::is_stable(closed)) {
        std::ostringstream os;
        os << "energy loop closed loop is unstable; poles:";
        for (const auto& p : linsys::poles(closed)) os << ' ' << p.real() << (p.imag() < 0 ? "" : "+") << p.imag() << 'j';
        throw Error(ErrorCode::instability, os.str());
    }

    // (G_Pac/s)/(1+G_nrg) = num_p den_g / (s den_p (den_g + num_g)); cancel s den_p
    const Polynomial sden = Polynomial::monomial(1) * gpac.den();
    const auto [q, r] = gnrg.den().divmod(sden);
    RationalTransferFunction ac_tf = r.max_abs_coeff() <= 1e-12 * gnrg.den().max_abs_coeff()
                                         ? RationalTransferFunction(gpac.num() * q, char_poly)
                                         : RationalTransferFunction(gpac.num() * gnrg.den(), sden * char_poly);

    ResponseTargets out;
    out.y_dc_ac = linsys::step_response(closed, t_end, dt);
    out.y_ac_ac = linsys::ramp_response(ac_tf, t_end, dt);
    out.dc_ac_metrics = linsys::step_metrics(out.y_dc_ac, 1.0);
    // ramp final value: d/ds of the transfer function at s = 0
    const Polynomial n = ac_tf.num(), d = ac_tf.den();
    const double n0 = n(0.0), d0 = d(0.0);
    const double n1 = n.derivative()(0.0), d1 = d.derivative()(0.0);
    const double final_ramp = std::abs(n0) > 0.0 ? std::numeric_limits<double>::infinity() : (n1 * d0 - n0 * d1) / (d0 * d0);
    out.ac_ac_metrics = linsys::step_metrics(out.y_ac_ac, final_ramp);
    return out;
}

DcCurrentTuning tune_dc_current(double L_d, double R_d, double omega_idc, double omega_s) {
    require(L_d > 0.0 && R_d >= 0.0 && omega_idc > 0.0 && omega_s > 0.0, "tune_dc_current: inputs out of range");
    return {{L_d * omega_idc, R_d * omega_idc}, omega_idc > omega_s / 10.0};
}

RationalTransferFunction dc_current_closed_loop(double L_d, double R_d, const PiGains& g) {
    return {Polynomial{g.K_i, g.K_p}, Polynomial{g.K_i, R_d + g.K_p, L_d}};
}

RationalTransferFunction design_compensator(double C_dc, double L_dc, double R_dc, double omega_idc) {
    require(C_dc > 0.0 && L_dc > 0.0 && R_dc >= 0.0 && omega_idc > 0.0, "design_compensator: inputs out of range");
    const Polynomial lag{1.0, 0.1 / omega_idc};
    return {Polynomial{16.0, C_dc * R_dc, C_dc * L_dc}, 16.0 * (lag * lag)};
}

PiGains tune_dc_voltage(double C_dc, double omega_idc, double h) {
    require(h > 1.0, "tune_dc_voltage: h must be > 1");
    require(C_dc > 0.0 && omega_idc > 0.0, "tune_dc_voltage: inputs must be > 0");
    return {C_dc * omega_idc / std::sqrt(h), C_dc * omega_idc * omega_idc / std::pow(h, 1.5)};
}

RationalTransferFunction build_gudc(const PiGains& g, double C_dc, double omega_idc) {
    const Polynomial lag{1.0, 0.1 / omega_idc};
    const Polynomial den = Polynomial::monomial(2, C_dc) * Polynomial{1.0, 1.0 / omega_idc} * lag * lag;
    return {Polynomial{g.K_i, g.K_p}, den};
}

RationalTransferFunction assemble_gudc(const PiGains& g, double C_dc, double L_dc, double R_dc, double omega_idc) {
    const RationalTransferFunction pi(Polynomial{g.K_i, g.K_p}, Polynomial::monomial(1));
    const auto cmp = design_compensator(C_dc, L_dc, R_dc, omega_idc);
    const RationalTransferFunction current(Polynomial{1.0}, Polynomial{1.0, 1.0 / omega_idc});
    const RationalTransferFunction line(Polynomial{16.0},
                                        Polynomial::monomial(1, C_dc) * Polynomial{16.0, C_dc * R_dc, C_dc * L_dc});
    return linsys::series(linsys::series(pi, cmp), linsys::series(current, line));
}

double tf_mismatch(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    const Polynomial l = a.num() * b.den();
    const Polynomial r = b.num() * a.den();
    const double scale = std::max(l.max_abs_coeff(), r.max_abs_coeff());
    if (scale == 0.0) return 0.0;
    return (l - r).max_abs_coeff() / scale;
}

double tune_droop(double delta_U_dcm, double delta_f_m) {
    require(delta_U_dcm > 0.0 && delta_f_m > 0.0, "tune_droop: inputs must be > 0");
    return delta_U_dcm / delta_f_m;
}

BandwidthBounds bandwidth_bounds(double omega_N, double omega_s, double h_ac, double h_dc) {
    require(omega_N > 0.0 && omega_s > 0.0 && h_ac > 1.0 && h_dc > 1.0, "bandwidth_bounds: inputs out of range");
    return {omega_N / std::sqrt(h_ac), omega_s / 10.0 / std::sqrt(h_dc)};
}

LoopReport analyse_loop(std::string name, RationalTransferFunction open_loop, double omega_L, double omega_H) {
    LoopReport r;
    r.name = std::move(name);
    r.open_loop = std::move(open_loop);
    r.omega_L = omega_L;
    r.omega_H = omega_H;
    r.margins = linsys::margins(r.open_loop, omega_L / 100.0, omega_H * 100.0);
    const double mid = std::sqrt(omega_L * omega_H);
    r.crossover_placement_error = (r.margins.gain_crossover_rad_s - mid) / mid;
    return r;
}

const LoopReport& TuningReport::loop(const std::string& name) const {
    for (const auto& l : loops) {
        if (l.name == name) return l;
    }
    throw Error(ErrorCode::invalid_input, "no loop named " + name);
}

RationalTransferFunction link_gpac(const acpower::AcLinkParameters& link_si, double P, double U_N, double S_N,
                                   double f_N, double R_v, double T_v, double* delta_out) {
    const auto base = acpower::per_unit_base(S_N, U_N, f_N);
    const auto pu = acpower::to_per_unit(link_si, base);
    const double delta = acpower::solve_delta_for_power(pu, P / S_N);
    if (delta_out) *delta_out = delta;
    const auto op = acpower::operating_point(pu, delta);
    return acpower::gpac_si(pu, {R_v / base.Z_b, T_v}, op, base);
}

namespace {

struct LinkModels {
    RationalTransferFunction on{Polynomial{1.0}, Polynomial{1.0}};
    RationalTransferFunction off{Polynomial{1.0}, Polynomial{1.0}};
    RationalTransferFunction w{Polynomial{1.0}, Polynomial{1.0}};
    double delta_on{}, delta_off{}, delta_w{};
};

LinkModels link_models(const SystemParams& sys, double R_v_on, double T_v_on, double R_v_off, double T_v_off,
                       double R_vw, double T_vw) {
    LinkModels m;
    const double P = sys.owpp.P_set;
    m.on = link_gpac(onshore_link(sys), P, sys.mmc_on.U_N, sys.S_N, sys.f_N, R_v_on, T_v_on, &m.delta_on);
    m.off = link_gpac(offshore_link(sys), P, sys.mmc_off.U_N, sys.S_N, sys.f_N, R_v_off, T_v_off, &m.delta_off);
    m.w = link_gpac(wtg_link(sys), P, sys.owpp.U_N, sys.S_N, sys.f_N, R_vw, T_vw, &m.delta_w);
    return m;
}

std::vector<LoopReport> loops_for(const SystemParams& sys, const TuningInputs& in, const ControllerGains& g,
                                  const LinkModels& m) {
    std::vector<LoopReport> loops;
    const double wN = in.omega_N;
    loops.push_back(analyse_loop("gnrg_on", build_gnrg(g.mmc_on.K_H, g.mmc_on.K_D, m.on), kTwoPi / g.mmc_on.K_D, wN));
    loops.push_back(
        analyse_loop("gnrg_off", build_gnrg(g.mmc_off.K_H, g.mmc_off.K_D, m.off), kTwoPi / g.mmc_off.K_D, wN));
    loops.push_back(
        analyse_loop("gnrg_wtg", build_gnrg(g.wtg.K_Hlink, g.wtg.K_Dlink, m.w), kTwoPi / g.wtg.K_Dlink, wN));
    const PiGains udc{g.mmc_on.K_pUdc, g.mmc_on.K_iUdc};
    loops.push_back(analyse_loop("gudc", build_gudc(udc, sys.line.C_dc, in.omega_idc), udc.K_i / udc.K_p,
                                 in.omega_idc));
    return loops;
}

}  // namespace

std::vector<LoopReport> analyse_gains(const SystemParams& sys, const TuningInputs& in, const ControllerGains& g) {
    const auto m = link_models(sys, g.mmc_on.R_v, g.mmc_on.T_v, g.mmc_off.R_v, g.mmc_off.T_v, g.wtg.R_vw, g.wtg.T_vw);
    return loops_for(sys, in, g, m);
}

TuningReport tune_system(const SystemParams& sys, const TuningInputs& in) {
    sys.validate();
    in.validate();
    TuningReport r;
    r.inputs = in;
    const double wN = in.omega_N;

    const double Zb_on = acpower::per_unit_base(sys.S_N, sys.mmc_on.U_N, sys.f_N).Z_b;
    const double Zb_off = acpower::per_unit_base(sys.S_N, sys.mmc_off.U_N, sys.f_N).Z_b;
    const double Zb_w = acpower::per_unit_base(sys.S_N, sys.owpp.U_N, sys.f_N).Z_b;
    const double R_v_on = in.R_v_pu * Zb_on, R_v_off = in.R_v_pu * Zb_off, R_vw = in.R_v_pu * Zb_w;

    const auto m = link_models(sys, R_v_on, in.T_v_on, R_v_off, in.T_v_off, R_vw, in.T_vw);
    r.delta_on = m.delta_on;
    r.delta_off = m.delta_off;
    r.delta_w = m.delta_w;
    r.gpac_dc_gain_on = m.on.dc_gain();
    r.gpac_dc_gain_off = m.off.dc_gain();
    r.gpac_dc_gain_w = m.w.dc_gain();
    if (!(r.gpac_dc_gain_on > 0.0) || !(r.gpac_dc_gain_off > 0.0) || !(r.gpac_dc_gain_w > 0.0)) {
        throw Error(ErrorCode::infeasible, "G_Pac(0) is not positive at the dispatch operating point");
    }

    const auto e_on = tune_energy_loop(in.h_ac_on, r.gpac_dc_gain_on, wN);
    const auto e_off = tune_energy_loop(in.h_ac_off, r.gpac_dc_gain_off, wN);
    const auto e_w = tune_energy_loop(in.h_ac_w, r.gpac_dc_gain_w, wN);
    const auto udc = tune_dc_voltage(sys.line.C_dc, in.omega_idc, in.h_dc);
    const auto cmp = design_compensator(sys.line.C_dc, sys.line.L_dc, sys.line.R_dc, in.omega_idc);

    auto mmc = [&](const MmcStation& st, const EnergyGains& e, double R_v, double T_v, double df_m) {
        const auto idc = tune_dc_current(st.converter.L_d, st.converter.R_d, in.omega_idc, in.omega_s);
        control::MmcControllerGains g;
        g.K_H = e.K_H;
        g.K_D = e.K_D;
        g.K_R = tune_droop(in.delta_U_dcm, df_m);
        g.R_v = R_v;
        g.T_v = T_v;
        g.K_pUdc = udc.K_p;
        g.K_iUdc = udc.K_i;
        g.K_pIdc = idc.gains.K_p;
        g.K_iIdc = idc.gains.K_i;
        g.cmp_num = cmp.num();
        g.cmp_den = cmp.den();
        g.f_star = sys.f_N;
        g.U_mid_star = sys.U_dc_nom;
        g.W_t_star = st.converter.W_t_nom;
        g.R_dc = sys.line.R_dc;
        if (idc.above_sampling_limit) {
            r.warnings.push_back("omega_idc " + fmt("%g", in.omega_idc) + " rad/s is above omega_s/10");
        }
        return g;
    };
    r.gains.mmc_on = mmc(sys.mmc_on, e_on, R_v_on, in.T_v_on, in.delta_f_m_on);
    r.gains.mmc_off = mmc(sys.mmc_off, e_off, R_v_off, in.T_v_off, in.delta_f_m_off);

    auto& w = r.gains.wtg;
    w.K_Hlink = e_w.K_H;
    w.K_Dlink = e_w.K_D;
    w.R_vw = R_vw;
    w.T_vw = in.T_vw;
    w.K_Hw = sys.owpp.K_Hw;
    w.K_Rw = sys.owpp.K_Rw;
    w.P_set = sys.owpp.P_set;
    w.U_link_nom = sys.owpp.wtg.U_link_nom;
    w.W_link_star = 0.5 * sys.owpp.wtg.C_link * w.U_link_nom * w.U_link_nom;
    w.f_star = sys.f_N;

    r.loops = loops_for(sys, in, r.gains, m);
    r.bounds = bandwidth_bounds(wN, in.omega_s, in.h_ac_on, in.h_dc);
    r.gudc_assembly_mismatch =
        tf_mismatch(build_gudc(udc, sys.line.C_dc, in.omega_idc),
                    assemble_gudc(udc, sys.line.C_dc, sys.line.L_dc, sys.line.R_dc, in.omega_idc));

    if (in.h_ac_on < 5.0 || in.h_ac_off < 5.0 || in.h_ac_w < 5.0) {
        r.warnings.push_back("h_ac below 5: the energy loop phase margin may fall short of 30 deg");
    }
    if (in.h_dc < 4.0) r.warnings.push_back("h_dc below 4: the DC voltage loop phase margin may fall short of 30 deg");
    auto check_tv = [&](const char* name, double T_v) {
        if (T_v < 5.0 / wN || T_v > 10.0 / wN) {
            r.warnings.push_back(std::string(name) + " = " + fmt("%g", T_v) + " s is outside [5/omega_N, 10/omega_N]");
        }
    };
    check_tv("T_v_on", in.T_v_on);
    check_tv("T_v_off", in.T_v_off);
    check_tv("T_vw", in.T_vw);
    for (const auto& l : r.loops) {
        if (l.margins.multiple_crossovers) r.warnings.push_back(l.name + ": several gain crossovers");
        if (l.margins.phase_margin_deg < 25.0) {
            r.warnings.push_back(l.name + ": phase margin " + fmt("%.1f", l.margins.phase_margin_deg) + " deg");
        }
    }
    return r;
}

std::string format_report(const TuningReport& r) {
    std::ostringstream os;
    os << "dispatch operating angles (rad): on " << r.delta_on << ", off " << r.delta_off << ", wtg " << r.delta_w
       << "\n";
    os << "G_Pac(0) (W/rad): on " << r.gpac_dc_gain_on << ", off " << r.gpac_dc_gain_off << ", wtg " << r.gpac_dc_gain_w
       << "\n";
    os << "loop       PM(deg)  w_c(rad/s)  sqrt(wL*wH)  placement  GM(dB)\n";
    for (const auto& l : r.loops) {
        char line[160];
        std::snprintf(line, sizeof line, "%-9s  %7.2f  %10.2f  %11.2f  %+8.2f%%  %6.2f\n", l.name.c_str(),
                      l.margins.phase_margin_deg, l.margins.gain_crossover_rad_s, std::sqrt(l.omega_L * l.omega_H),
                      100.0 * l.crossover_placement_error, l.margins.gain_margin_db);
        os << line;
    }
    os << "bandwidth bounds (rad/s): ac " << r.bounds.ac << ", dc " << r.bounds.dc << "\n";
    os << "G_Udc reduced vs assembled mismatch: " << r.gudc_assembly_mismatch << "\n";
    if (r.warnings.empty()) os << "warnings: none\n";
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

}  // namespace gfm::tuning
