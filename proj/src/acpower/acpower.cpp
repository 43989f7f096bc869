#include "gfm/acpower.hpp"

#include "gfm/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gfm::acpower {

using linsys::Polynomial;
using linsys::RationalTransferFunction;

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::invalid_input, std::string(name) + " must be > 0");
}

}  // namespace

PerUnitBase per_unit_base(double S_N, double U_N, double f_N) {
    require_positive(S_N, "S_N");
    require_positive(U_N, "U_N");
    require_positive(f_N, "f_N");
    PerUnitBase b;
    b.S_N = S_N;
    b.U_N = U_N;
    b.f_N = f_N;
    b.U_b = std::sqrt(2.0 / 3.0) * U_N;
    b.I_b = std::sqrt(2.0 / 3.0) * S_N / U_N;
    b.Z_b = b.U_b / b.I_b;
    b.omega_b = 2.0 * std::numbers::pi * f_N;
    b.L_b = b.Z_b / b.omega_b;
    return b;
}

void AcLinkParameters::validate() const {
    if (!(R >= 0.0)) throw Error(ErrorCode::invalid_input, "AC link R must be >= 0");
    require_positive(L, "AC link L");
    require_positive(omega1, "AC link omega1");
    require_positive(U, "AC link U");
    require_positive(E, "AC link E");
}

AcLinkParameters to_per_unit(const AcLinkParameters& si, const PerUnitBase& base) {
    AcLinkParameters pu;
    pu.R = si.R / base.Z_b;
    pu.L = si.L / base.L_b;
    pu.omega1 = si.omega1 / base.omega_b;
    pu.U = si.U / base.U_b;
    pu.E = si.E / base.U_b;
    pu.unit_system = UnitSystem::per_unit;
    return pu;
}

OperatingPoint operating_point(const AcLinkParameters& p, double delta_o) {
    p.validate();
    if (!(std::abs(delta_o) < std::numbers::pi / 2)) {
        throw Error(ErrorCode::invalid_input, "operating angle outside (-pi/2, pi/2)");
    }
    OperatingPoint op;
    op.delta_o = delta_o;
    op.U_o = p.U;
    op.E_o = p.E;
    op.u_do = p.U * std::cos(delta_o);
    op.u_qo = p.U * std::sin(delta_o);
    const double X = p.omega1 * p.L;
    op.I_o = std::hypot(op.u_do - p.E, op.u_qo) / std::hypot(p.R, X);
    op.theta_Io = std::atan2(op.u_qo, op.u_do - p.E) - std::atan2(X, p.R);
    op.i_do = op.I_o * std::cos(op.theta_Io);
    op.i_qo = op.I_o * std::sin(op.theta_Io);
    op.phi_o = op.theta_Io - delta_o;
    return op;
}

RationalTransferFunction nonlinear_power_tf(const AcLinkParameters& p, double u_d, double u_q, double delta) {
    p.validate();
    const double c = std::cos(delta), s = std::sin(delta);
    const double U2 = u_d * u_d + u_q * u_q;
    const double L = p.L, R = p.R, w = p.omega1, E = p.E;
    const double alpha1 = -L * E * u_d * c + L * E * u_q * s + U2 * L;
    const double alpha0 = E * (L * w * u_q - R * u_d) * c + E * (L * w * u_d + R * u_q) * s + U2 * R;
    const double k = p.power_scale();
    // (sL + R)^2 + (wL)^2
    Polynomial den{R * R + w * w * L * L, 2.0 * R * L, L * L};
    return {Polynomial{k * alpha0, k * alpha1}, den};
}

double steady_state_power(const AcLinkParameters& p, double delta) {
    return nonlinear_power_tf(p, p.U, 0.0, delta).dc_gain();
}

double solve_delta_for_power(const AcLinkParameters& p, double P_target, double tol) {
    p.validate();
    if (!(P_target >= 0.0)) throw Error(ErrorCode::infeasible, "negative power target");
    double lo = 0.0, hi = std::numbers::pi / 2;
    const double p_lo = steady_state_power(p, lo), p_hi = steady_state_power(p, hi);
    if (std::abs(p_lo - P_target) <= tol) return lo;
    if (P_target < p_lo || P_target >= p_hi) {
        throw Error(ErrorCode::infeasible, "power target " + std::to_string(P_target) +
                                               " outside the reachable range of the AC link");
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double pm = steady_state_power(p, mid);
        if (std::abs(pm - P_target) <= tol) return mid;
        if (pm < P_target) lo = mid;
        else hi = mid;
        if (hi - lo <= 1e-16) break;
    }
    return mid;
}

double beta(double s_mag, double R_v, double T_v, double L, double omega_b) {
    if (!(T_v >= 0.0)) throw Error(ErrorCode::invalid_input, "T_v must be >= 0");
    require_positive(L, "L");
    const double a = T_v * s_mag + 1.0;
    const double k = R_v * T_v * omega_b;
    return 1.0 + (k - 2.0 * L) / (2.0 * L * a) - k / (2.0 * L * a * a);
}

RationalTransferFunction gpac(const AcLinkParameters& p, const VirtualResistanceParams& vr, const OperatingPoint& op,
                              const PerUnitBase& base) {
    p.validate();
    if (!(vr.R_v >= 0.0) || !(vr.T_v > 0.0)) throw Error(ErrorCode::invalid_input, "invalid virtual resistance");
    const double wb = base.omega_b;
    const double b = beta(wb, vr.R_v, vr.T_v, p.L, wb);
    // s^2 + 2 beta (R_v/L) wb s + w1^2 wb^2
    const Polynomial den{p.omega1 * p.omega1 * wb * wb, 2.0 * b * vr.R_v / p.L * wb, 1.0};
    const double k = op.I_o * std::sin(op.phi_o);
    const Polynomial num = op.U_o * (Polynomial{p.omega1 * op.U_o * wb * wb / p.L} + k * den);
    return {num, den};
}

RationalTransferFunction gpac_si(const AcLinkParameters& p, const VirtualResistanceParams& vr,
                                 const OperatingPoint& op, const PerUnitBase& base) {
    return linsys::scale(gpac(p, vr, op, base), base.S_N);
}

double gpac_dc_gain_si(const AcLinkParameters& p, const OperatingPoint& op) {
    p.validate();
    const double X = p.omega1 * p.L;
    return 1.5 * op.U_o * (op.U_o * X / (p.R * p.R + X * X) + op.I_o * std::sin(op.phi_o));
}

PoleMetrics gpac_pole_metrics(const RationalTransferFunction& tf) {
    if (tf.den().degree() != 2) {
        throw Error(ErrorCode::shape, "expected exactly one second-order pole pair, got order " +
                                          std::to_string(tf.den().degree()));
    }
    const auto p = linsys::poles(tf);
    // monic quadratic s^2 + a1 s + a0 = s^2 + 2 zeta wn s + wn^2
    const double a0 = tf.den()[0], a1 = tf.den()[1];
    if (!(a0 > 0.0)) throw Error(ErrorCode::shape, "pole pair has no positive natural frequency");
    PoleMetrics m;
    if (p[0].imag() != 0.0) {
        m.natural_frequency = std::abs(p[0]);
        m.damping_ratio = -p[0].real() / m.natural_frequency;
    } else {
        m.natural_frequency = std::sqrt(a0);
        m.damping_ratio = a1 / (2.0 * m.natural_frequency);
    }
    return m;
}

}  // namespace gfm::acpower
