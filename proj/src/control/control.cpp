#include "gfm/control.hpp"

#include "gfm/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace gfm::control {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxOrder = 8;

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxOrder, kMaxOrder>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxOrder, 1>;

double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

bool finite(Dq v) { return std::isfinite(v.d) && std::isfinite(v.q); }

// backward-Euler low-pass update; the high-pass output is i - lp
Dq lowpass_step(Dq lp, Dq i, double dt, double T) {
    const double k = dt / T;
    return {(lp.d + k * i.d) / (1.0 + k), (lp.q + k * i.q) / (1.0 + k)};
}

}  // namespace

// ---------------------------------------------------------------- DiscreteTf

DiscreteTf::DiscreteTf(const linsys::RationalTransferFunction& tf) {
    if (!tf.is_proper()) throw Error(ErrorCode::improper_system, "controller transfer function is improper");
    const std::size_t n = tf.den().degree();
    if (n > static_cast<std::size_t>(kMaxOrder)) throw Error(ErrorCode::invalid_input, "controller order too high");
    d_ = tf.num()[n];
    const linsys::Polynomial strict = tf.num() - d_ * tf.den();
    a_.resize(n);
    c_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        a_[k] = tf.den()[k];
        c_[k] = strict[k];
    }
}

double DiscreteTf::step(std::vector<double>& x, double u, double dt) const {
    const auto n = static_cast<Eigen::Index>(a_.size());
    if (n == 0) return d_ * u;
    if (x.size() != a_.size()) x.assign(a_.size(), 0.0);
    // (I - dt A) x_new = x + dt B u
    SmallMat M = SmallMat::Identity(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) M(k, k + 1) = -dt;
    for (Eigen::Index k = 0; k < n; ++k) M(n - 1, k) += dt * a_[static_cast<std::size_t>(k)];
    SmallVec rhs = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    rhs(n - 1) += dt * u;
    const SmallVec xn = M.partialPivLu().solve(rhs);
    double y = d_ * u;
    for (Eigen::Index k = 0; k < n; ++k) {
        x[static_cast<std::size_t>(k)] = xn(k);
        y += c_[static_cast<std::size_t>(k)] * xn(k);
    }
    return y;
}

std::vector<double> DiscreteTf::steady_state(double u) const {
    const std::size_t n = a_.size();
    if (n == 0) return {};
    if (a_[0] == 0.0) throw Error(ErrorCode::invalid_input, "no equilibrium with a pole at the origin");
    // x1 = u/a0, higher states are derivatives and vanish
    std::vector<double> x(n, 0.0);
    x[0] = u / a_[0];
    return x;
}

// ---------------------------------------------------------------------- MMC

void MmcControllerGains::validate() const {
    if (!(K_H > 0.0) || !(K_D >= 0.0) || !(T_v > 0.0) || !(R_v >= 0.0)) {
        throw Error(ErrorCode::invalid_input, "MMC controller gains: need K_H > 0, K_D >= 0, T_v > 0, R_v >= 0");
    }
    const auto tf = cmp();
    if (!tf.is_proper()) throw Error(ErrorCode::invalid_input, "compensator is improper");
    if (!linsys::is_stable(tf)) throw Error(ErrorCode::invalid_input, "compensator denominator is not stable");
}

MmcActuation mmc_control_step(const MmcControllerGains& g, MmcControllerState& s, const MmcMeasurements& m,
                              double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_input, "controller step needs dt > 0");
    const bool ok = std::isfinite(m.W_t) && finite(m.i_s) && std::isfinite(m.U_dc) && std::isfinite(m.I_dc) &&
                    std::isfinite(m.U_ac_setpoint);
    if (!ok) {
        s.fault = true;
        return {s.last_u_diff, s.last_u_sum0, wrap_angle(s.last_theta_out), s.last_theta_out};
    }

    // (a) energy to angle: K_H (2 pi + K_D s)/s as integral plus proportional path
    const double dW = m.W_t - g.W_t_star;
    s.delta_f = g.K_H * dW;
    s.energy_pi_int += dt * kTwoPi * s.delta_f;
    s.theta += dt * kTwoPi * (g.f_star + s.delta_f);
    const double theta_out = s.theta + g.K_H * g.K_D * dW;

    // (b) voltage command with transient virtual resistance
    s.vr_lowpass = lowpass_step(s.vr_lowpass, m.i_s, dt, g.T_v);
    const Dq hp = m.i_s - s.vr_lowpass;
    const Dq u_diff{m.U_ac_setpoint - g.R_v * hp.d, -g.R_v * hp.q};

    // (c) DC side
    s.U_mid_hat = m.U_dc + 0.5 * g.R_dc * m.I_dc;
    s.e_dc = g.U_mid_star + g.K_R * s.delta_f - s.U_mid_hat;
    s.udc_pi_int += dt * g.K_iUdc * s.e_dc;
    const double i_inject = g.K_pUdc * s.e_dc + s.udc_pi_int;
    if (s.cmp_filter.order() != g.cmp_den.degree()) s.cmp_filter = DiscreteTf(g.cmp());
    const double i_inject_cmp = s.cmp_filter.step(s.cmp_states, i_inject, dt);
    const double I_ref = -i_inject_cmp;
    const double e_i = I_ref - m.I_dc;
    s.idc_pi_int += dt * g.K_iIdc * e_i;
    const double v = g.K_pIdc * e_i + s.idc_pi_int;
    const double u_sum0 = 0.5 * (m.U_dc - v);

    s.fault = false;
    s.last_u_diff = u_diff;
    s.last_u_sum0 = u_sum0;
    s.last_theta_out = theta_out;
    return {u_diff, u_sum0, wrap_angle(theta_out), theta_out};
}

void mmc_controller_equilibrium(const MmcControllerGains& g, MmcControllerState& s, const MmcMeasurements& m,
                                double theta0, double u_sum0_eq) {
    s = MmcControllerState{};
    s.cmp_filter = DiscreteTf(g.cmp());
    s.theta = theta0 - g.K_H * g.K_D * (m.W_t - g.W_t_star);
    s.vr_lowpass = m.i_s;
    s.delta_f = g.K_H * (m.W_t - g.W_t_star);
    s.U_mid_hat = m.U_dc + 0.5 * g.R_dc * m.I_dc;
    const double i_inject = -m.I_dc;
    s.udc_pi_int = i_inject;
    s.cmp_states = s.cmp_filter.steady_state(i_inject);
    s.idc_pi_int = m.U_dc - 2.0 * u_sum0_eq;
    s.last_u_diff = {m.U_ac_setpoint, 0.0};
    s.last_u_sum0 = u_sum0_eq;
    s.last_theta_out = theta0;
}

void WtgControllerGains::validate() const {
    if (!(K_Hlink > 0.0) || !(K_Dlink >= 0.0) || !(T_vw > 0.0) || !(R_vw >= 0.0) || !(U_link_nom > 0.0)) {
        throw Error(ErrorCode::invalid_input, "WTG controller gains: need K_Hlink > 0, K_Dlink >= 0, T_vw > 0");
    }
}

// ---------------------------------------------------------------------- WTG

WtgActuation wtg_control_step(const WtgControllerGains& g, WtgControllerState& s, const WtgMeasurements& m,
                              double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_input, "controller step needs dt > 0");
    const bool ok = std::isfinite(m.W_link) && std::isfinite(m.U_link) && std::isfinite(m.I_MSC) &&
                    std::isfinite(m.I_GSC) && finite(m.i_w) && std::isfinite(m.U_ac_setpoint);
    if (!ok) {
        s.fault = true;
        return {s.last_u_gsc, s.last_P_cmd, wrap_angle(s.last_theta_out), s.last_theta_out};
    }

    const double dW = m.W_link - g.W_link_star;
    s.delta_f_wtg = g.K_Hlink * dW;
    s.energy_pi_int += dt * kTwoPi * s.delta_f_wtg;
    s.theta_wtg += dt * kTwoPi * (g.f_star + s.delta_f_wtg);
    const double theta_out = s.theta_wtg + g.K_Hlink * g.K_Dlink * dW;

    // RoCoF from the DC-link current balance, no frequency derivative taken
    s.rocof_est = g.K_Hlink * g.U_link_nom * (m.I_MSC - m.I_GSC);
    double df = s.delta_f_wtg;
    const double rocof = s.rocof_est;
    if (g.remote_frequency_hook) {
        df = m.remote_f_on - g.f_star;
    }
    s.P_fr = -(g.K_Hw * rocof + g.K_Rw * df);
    const double P_cmd = g.P_set + s.P_fr;

    s.vr_lowpass = lowpass_step(s.vr_lowpass, m.i_w, dt, g.T_vw);
    const Dq hp = m.i_w - s.vr_lowpass;
    const Dq u{m.U_ac_setpoint - g.R_vw * hp.d, -g.R_vw * hp.q};

    s.fault = false;
    s.last_u_gsc = u;
    s.last_P_cmd = P_cmd;
    s.last_theta_out = theta_out;
    return {u, P_cmd, wrap_angle(theta_out), theta_out};
}

void wtg_controller_equilibrium(const WtgControllerGains& g, WtgControllerState& s, const WtgMeasurements& m,
                                double theta0) {
    s = WtgControllerState{};
    s.theta_wtg = theta0 - g.K_Hlink * g.K_Dlink * (m.W_link - g.W_link_star);
    s.vr_lowpass = m.i_w;
    s.delta_f_wtg = g.K_Hlink * (m.W_link - g.W_link_star);
    s.last_u_gsc = {m.U_ac_setpoint, 0.0};
    s.last_P_cmd = g.P_set;
    s.last_theta_out = theta0;
}

// ----------------------------------------------------------------- locality

namespace {

std::string terminal_of(ControllerKind k) {
    switch (k) {
        case ControllerKind::mmc_onshore: return "onshore MMC terminal";
        case ControllerKind::mmc_offshore: return "offshore MMC terminal";
        case ControllerKind::wtg: return "WTG terminal";
    }
    return "unknown";
}

}  // namespace

ControllerDescriptor describe(const MmcControllerGains&, ControllerKind kind) {
    const std::string t = terminal_of(kind);
    ControllerDescriptor d;
    d.name = kind == ControllerKind::mmc_onshore ? "onshore MMC controller" : "offshore MMC controller";
    d.kind = kind;
    d.inputs = {{"W_t", t}, {"i_s", t}, {"U_dc", t}, {"I_dc", t}};
    return d;
}

ControllerDescriptor describe(const WtgControllerGains& g) {
    const std::string t = terminal_of(ControllerKind::wtg);
    ControllerDescriptor d;
    d.name = "WTG controller";
    d.kind = ControllerKind::wtg;
    d.inputs = {{"W_link", t}, {"U_link", t}, {"I_MSC", t}, {"I_GSC", t}, {"i_w", t}};
    if (g.remote_frequency_hook) d.inputs.push_back({"f_on", "onshore grid"});
    return d;
}

AuditReport locality_audit(const std::vector<ControllerDescriptor>& controllers) {
    AuditReport r;
    for (const auto& c : controllers) {
        const std::string own = terminal_of(c.kind);
        std::string line = c.name + ":";
        for (const auto& in : c.inputs) {
            line += " " + in.signal;
            if (in.origin != own) {
                r.pass = false;
                r.violations.push_back(c.name + " reads " + in.signal + " from " + in.origin);
            }
        }
        r.lines.push_back(line);
    }
    return r;
}

}  // namespace gfm::control
