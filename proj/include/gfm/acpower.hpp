#pragma once

// Per-unit bases, AC operating points and the active-power transfer functions
// of a voltage source u feeding a source e through R + jwL.

#include "gfm/linsys.hpp"

namespace gfm::acpower {

struct PerUnitBase {
    double U_b{};      // V, peak phase
    double I_b{};      // A, peak
    double Z_b{};      // ohm
    double L_b{};      // H
    double omega_b{};  // rad/s
    double S_N{};      // VA
    double U_N{};      // V, line-to-line rms
    double f_N{};      // Hz
};

PerUnitBase per_unit_base(double S_N, double U_N, double f_N);

enum class UnitSystem { si, per_unit };

/// Two sources u (angle delta) and e (angle 0) joined by R + j*omega1*L.
/// Amplitudes are peak values. In SI the three-phase power carries the 3/2
/// factor of the amplitude-invariant dq transform; in per-unit it does not.
struct AcLinkParameters {
    double R{};
    double L{};
    double omega1{};
    double U{};
    double E{};
    UnitSystem unit_system{UnitSystem::per_unit};

    double power_scale() const { return unit_system == UnitSystem::si ? 1.5 : 1.0; }
    void validate() const;
};

/// Converts SI link data (R, L in ohm/H, omega1 in rad/s) to per-unit on `base`.
AcLinkParameters to_per_unit(const AcLinkParameters& si, const PerUnitBase& base);

struct OperatingPoint {
    double delta_o{};
    double U_o{};
    double E_o{};
    double u_do{};
    double u_qo{};
    double i_do{};
    double i_qo{};
    double I_o{};
    double theta_Io{};
    double phi_o{};
};

struct VirtualResistanceParams {
    double R_v{};
    double T_v{};
};

OperatingPoint operating_point(const AcLinkParameters& params, double delta_o);

/// Steady power out of u at angle delta (s = 0 value of the nonlinear power function).
double steady_state_power(const AcLinkParameters& params, double delta);

/// Angle on [0, pi/2] at which the steady power equals P_target.
double solve_delta_for_power(const AcLinkParameters& params, double P_target, double tol = 1e-9);

/// (alpha1 s + alpha0)/((sL+R)^2 + (omega L)^2), where (u_d, u_q) are the
/// components of u in a frame leading e by delta.
linsys::RationalTransferFunction nonlinear_power_tf(const AcLinkParameters& params, double u_d, double u_q,
                                                    double delta);

double beta(double s_mag, double R_v, double T_v, double L, double omega_b);

/// Small-signal power response to the angle of u, per-unit, R neglected.
linsys::RationalTransferFunction gpac(const AcLinkParameters& params_pu, const VirtualResistanceParams& vr,
                                      const OperatingPoint& op_pu, const PerUnitBase& base);

/// Same loop scaled to W/rad.
linsys::RationalTransferFunction gpac_si(const AcLinkParameters& params_pu, const VirtualResistanceParams& vr,
                                         const OperatingPoint& op_pu, const PerUnitBase& base);

/// dP/d(delta) at s = 0 from SI quantities, including the 3/2 factor and R.
double gpac_dc_gain_si(const AcLinkParameters& params_si, const OperatingPoint& op_si);

struct PoleMetrics {
    double natural_frequency{};
    double damping_ratio{};
};

/// Natural frequency and damping ratio of the single second-order pole pair.
/// A real pair is accepted and treated as an overdamped quadratic.
PoleMetrics gpac_pole_metrics(const linsys::RationalTransferFunction& tf);

}  // namespace gfm::acpower
