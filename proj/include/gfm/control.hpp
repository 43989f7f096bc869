#pragma once

// Discrete-time grid-forming controllers for the MMCs and the wind turbine.
// Each controller reads only signals measured at its own terminals.

#include "gfm/linsys.hpp"
#include "gfm/plant.hpp"

#include <string>
#include <vector>

namespace gfm::control {

using plant::Dq;

/// Backward-Euler realization of a proper SISO transfer function.
class DiscreteTf {
public:
    DiscreteTf() = default;
    explicit DiscreteTf(const linsys::RationalTransferFunction& tf);

    /// One step with input u held over (t - dt, t]; returns y(t).
    double step(std::vector<double>& x, double u, double dt) const;
    /// States for a constant input at equilibrium (requires no pole at the origin).
    std::vector<double> steady_state(double u) const;
    std::size_t order() const noexcept { return a_.size(); }

private:
    // controllable canonical form with monic denominator
    std::vector<double> a_;  // den coefficients a0..a_{n-1}
    std::vector<double> c_;  // output row
    double d_{0.0};
};

struct MmcControllerGains {
    double K_H{};         // Hz/J
    double K_D{};         // rad/Hz
    double K_R{};         // V/Hz
    double R_v{};         // ohm
    double T_v{};         // s
    double K_pUdc{};      // A/V
    double K_iUdc{};      // A/(V s)
    double K_pIdc{};      // V/A
    double K_iIdc{};      // V/(A s)
    linsys::Polynomial cmp_num{1.0};
    linsys::Polynomial cmp_den{1.0};
    double f_star{50.0};  // Hz
    double U_mid_star{};  // V
    double W_t_star{};    // J
    double R_dc{};        // ohm, line resistance used by the midpoint estimate

    linsys::RationalTransferFunction cmp() const { return {cmp_num, cmp_den}; }
    /// Throws invalid_input when an invariant fails (K_H > 0, K_D >= 0, T_v > 0, stable G_cmp).
    void validate() const;
};

struct MmcControllerState {
    double theta{};         // rad, unwrapped integral of 2 pi f
    double energy_pi_int{}; // rad, integral part of the energy path relative to f_star
    Dq vr_lowpass;          // A, complement of the high-pass filter state
    double udc_pi_int{};    // A
    double idc_pi_int{};    // V
    std::vector<double> cmp_states;
    DiscreteTf cmp_filter;  // realization of the gains' G_cmp, rebuilt on order change
    double delta_f{};       // Hz
    double U_mid_hat{};     // V
    double e_dc{};          // V
    bool fault{false};
    Dq last_u_diff;
    double last_u_sum0{};
    double last_theta_out{};
};

struct MmcMeasurements {
    double W_t{};
    Dq i_s;            // converter current in the controller's own frame
    double U_dc{};
    double I_dc{};     // from the line into the converter
    double U_ac_setpoint{};
};

struct MmcActuation {
    Dq u_diff_cmd;     // controller frame
    double u_sum0_cmd{};
    double theta{};    // rad, wrapped to (-pi, pi]
    double theta_unwrapped{};
};

MmcActuation mmc_control_step(const MmcControllerGains& gains, MmcControllerState& state,
                              const MmcMeasurements& meas, double dt);

/// Pre-loads filter and integrator states for an equilibrium with the given
/// measurements, output angle theta0 and arm voltage u_sum0_eq.
void mmc_controller_equilibrium(const MmcControllerGains& gains, MmcControllerState& state,
                                const MmcMeasurements& meas, double theta0, double u_sum0_eq);

struct WtgControllerGains {
    double K_Hlink{};      // Hz/J
    double K_Dlink{};      // rad/Hz
    double R_vw{};         // ohm
    double T_vw{};         // s
    double K_Hw{};         // W s/Hz
    double K_Rw{};         // W/Hz
    double P_set{};        // W
    double W_link_star{};  // J
    double U_link_nom{};   // V
    double f_star{50.0};   // Hz
    /// Test hook: feeds a remote onshore frequency into P_fr. Never set in
    /// shipped configurations; the locality audit must reject it.
    bool remote_frequency_hook{false};

    void validate() const;
};

struct WtgControllerState {
    double theta_wtg{};
    double energy_pi_int{};
    Dq vr_lowpass;
    double delta_f_wtg{};
    double rocof_est{};
    double P_fr{};
    bool fault{false};
    Dq last_u_gsc;
    double last_P_cmd{};
    double last_theta_out{};
};

struct WtgMeasurements {
    double W_link{};
    double U_link{};
    double I_MSC{};   // A, DC current from the machine-side converter into the link
    double I_GSC{};   // A, DC current from the link into the grid-side converter
    Dq i_w;           // GSC current in the controller's own frame
    double U_ac_setpoint{};
    double remote_f_on{};  // only read through the test hook
};

struct WtgActuation {
    Dq u_gsc_cmd;
    double P_MSC_cmd{};
    double theta{};
    double theta_unwrapped{};
};

WtgActuation wtg_control_step(const WtgControllerGains& gains, WtgControllerState& state,
                              const WtgMeasurements& meas, double dt);
void wtg_controller_equilibrium(const WtgControllerGains& gains, WtgControllerState& state,
                                const WtgMeasurements& meas, double theta0);

// ------------------------------------------------------------- locality

enum class ControllerKind { mmc_onshore, mmc_offshore, wtg };

struct SignalUse {
    std::string signal;
    std::string origin;  // terminal the signal is measured at
};

struct ControllerDescriptor {
    std::string name;
    ControllerKind kind{};
    std::vector<SignalUse> inputs;
};

/// Signals each controller consumes, derived from its gains (hooks included).
ControllerDescriptor describe(const MmcControllerGains& gains, ControllerKind kind);
ControllerDescriptor describe(const WtgControllerGains& gains);

struct AuditReport {
    bool pass{true};
    std::vector<std::string> lines;
    std::vector<std::string> violations;
};

AuditReport locality_audit(const std::vector<ControllerDescriptor>& controllers);

}  // namespace gfm::control
