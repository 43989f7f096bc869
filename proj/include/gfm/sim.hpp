#pragma once

// Fixed-step simulation of the whole HVDC-OWPP benchmark: plant, three
// controllers, scenario events, logging and frequency-support metrics.

#include "gfm/control.hpp"
#include "gfm/linsys.hpp"
#include "gfm/plant.hpp"
#include "gfm/system.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gfm::sim {

enum class EventKind { onshore_load_step, wind_power_step, setpoint_change };

struct Event {
    double t{};        // s
    EventKind kind{};
    double value{};    // W for the steps, target units for setpoint_change
    std::string target;  // setpoint_change only, see setpoint_targets()
};

/// Names accepted by setpoint_change.
const std::vector<std::string>& setpoint_targets();

struct Scenario {
    double duration{20.0};     // s, total simulated time including the settle period
    double dt{50e-6};          // s
    double settle_time{5.0};   // s
    double log_rate{10e3};     // Hz, upper bound on the stored sample rate
    bool full_rate_log{false};
    std::vector<Event> events;

    void validate() const;
    double first_event_time() const;
};

/// Load step of 5 % of the onshore machine rating at 6 s, 20 s in total.
Scenario benchmark_scenario(const SystemParams& sys);

enum class FrequencyPreset { none, fcr, inertia };

/// Sets K_Rw for 5 % OWPP droop (fcr) or K_Hw for 2H = 4 s (inertia); the
/// other gain is zeroed. The inertia gain is net of the inertia the DC link
/// already delivers through K_Hlink.
void apply_preset(ControllerGains& gains, const SystemParams& sys, FrequencyPreset preset);
FrequencyPreset parse_preset(const std::string& name);

// ----------------------------------------------------------------- logging

enum Channel : std::size_t {
    f_on, f_off, f_wtg,
    P_ac_on, P_dc_on, P_ac_off, P_dc_off, P_gsc, P_msc,
    W_t_on, W_t_off, W_link,
    U_dc_on, U_mid, U_dc_off,
    I_dc_on, I_dc_off,
    channel_count
};

const std::array<std::string, channel_count>& channel_names();

struct SimLog {
    std::vector<double> t;
    std::array<std::vector<double>, channel_count> data;
    int decimation{1};

    std::size_t size() const noexcept { return t.size(); }
    const std::vector<double>& operator[](Channel c) const { return data[c]; }
    std::vector<double>& operator[](Channel c) { return data[c]; }
    linsys::TimeSeries series(Channel c) const;
    void push(double time, const std::array<double, channel_count>& row);
};

void write_csv(std::ostream& os, const SimLog& log);
SimLog read_csv(std::istream& is);

// ------------------------------------------------------------------ engine

struct PlantState {
    plant::SyncMachineState machine;
    plant::MmcState mmc_on;
    plant::MmcState mmc_off;  // i_s unused: the offshore AC current is the WTG branch current
    plant::WtgState wtg;
    plant::HvdcLineState line;
};

struct Dispatch {
    double P_set{};   // W, WTG dispatch
    double P_load{};  // W, onshore load
};

class Simulation {
public:
    Simulation(SystemParams sys, ControllerGains gains);

    /// Algebraic pre-solve of the operating point followed by a settle run.
    /// Throws initialization (or infeasible) errors; divergence during the settle run keeps its code.
    void initialize(const Dispatch& dispatch, double settle_time, double dt);
    /// Pre-solve only, at t = 0; the step size stays at its previous value.
    void presolve(const Dispatch& dispatch);
    void set_step(double dt);

    void apply(const Event& ev);
    /// One explicit-Euler step; returns the logged quantities of this step.
    std::array<double, channel_count> step();
    /// Steps until t_end, applying each event at the first step with t >= its time.
    SimLog run_until(double t_end, const std::vector<Event>& events, int decimation);

    double time() const noexcept { return static_cast<double>(steps_) * dt_ + t0_; }
    const PlantState& state() const noexcept { return x_; }
    const SystemParams& system() const noexcept { return sys_; }
    const ControllerGains& gains() const noexcept { return gains_; }
    double grid_frequency() const { return x_.machine.omega_pu * sys_.f_N; }
    double load() const noexcept { return P_load_; }

    /// Largest state derivative, each divided by its nominal value times omega_N.
    double residual() const;

private:
    struct Derivs;
    Derivs derivatives(std::array<double, channel_count>* row);
    void check_divergence() const;

    SystemParams sys_;
    ControllerGains gains_;
    plant::WtgParams wtg_;
    PlantState x_;
    control::MmcControllerState c_on_;
    control::MmcControllerState c_off_;
    control::WtgControllerState c_w_;
    double theta_on_{};   // rad, converter voltage angles in the common frame
    double theta_off_{};
    double theta_w_{};
    double P_load_{};
    double P_machine_set_{};
    double P_gsc_last_{};
    double dt_{50e-6};
    double t0_{};
    long long steps_{};
    bool initialized_{false};
};

/// initialize + run_until with the scenario's events; log starts after the settle period.
SimLog run(const SystemParams& sys, const ControllerGains& gains, const Scenario& scenario);

/// Dispatch used by run(): P_set from the OWPP parameters and the onshore load.
Dispatch default_dispatch(const SystemParams& sys);

// ----------------------------------------------------------------- metrics

struct Metrics {
    double event_time{};
    double f_initial{};          // Hz, f_on just before the event
    double f_nadir{};            // Hz
    double max_rocof{};          // Hz/s, 500 ms window
    double settling_time{};      // s after the event, 5 % band
    double steady_delta_f_on{};  // Hz, mean over the final second
    double steady_delta_f_off{};
    double steady_delta_f_wtg{};
    std::vector<double> steady_power_chain;  // P_ac_on, P_dc_on, P_dc_off, P_ac_off, P_gsc, P_msc
};

Metrics compute_metrics(const SimLog& log, double event_time, double rocof_window = 0.5,
                        double settling_band = 0.05);

/// Same definitions on a bare frequency trace.
Metrics frequency_metrics(const linsys::TimeSeries& f, double event_time, double rocof_window = 0.5,
                          double settling_band = 0.05);

struct Check {
    std::string name;
    double value{};
    double tolerance{};
    bool pass{};
};

struct InvariantReport {
    bool pass{true};
    std::vector<Check> checks;
};

struct InvariantContext {
    double K_R_on{};
    double K_R_off{};
    double event_time{};
    double energy_tolerance{1e-3};      // fraction of the integral of |P_in - P_out|
    double chain_tolerance{1e-3};       // fraction of the transmitted power
    double droop_tolerance{1e-2};       // fraction of |K_R,on df_on|
};

/// Energy bookkeeping for W_t_on, W_t_off, W_link; steady power chain; droop closure.
InvariantReport verify_invariants(const SimLog& log, const InvariantContext& ctx);

/// Stored energy change against the trapezoidal integral of the power balance;
/// returns |error| / integral of |P_in - P_out| over [t_from, end].
double energy_error(const SimLog& log, Channel energy, Channel p_in, Channel p_out, double t_from);

// -------------------------------------------------------------- harnesses

struct AngleStepResult {
    linsys::TimeSeries nonlinear;  // W, change of the converter AC power
    linsys::TimeSeries linear;     // W, -step * G_Pac step response
    double peak_nonlinear{};
    double peak_linear{};
};

/// Converter at fixed angle with transient virtual resistance on the onshore
/// link; the Thevenin angle steps by `step` rad at t = 0.
AngleStepResult thevenin_angle_step(const SystemParams& sys, const ControllerGains& gains, double step,
                                    double t_end, double dt);

// ------------------------------------------------------------------- batch

struct BatchTask {
    SystemParams sys;
    ControllerGains gains;
    Scenario scenario;
};

struct BatchResult {
    std::optional<SimLog> log;
    std::string error;
    bool diverged{false};
};

/// Runs independent scenarios on up to `jobs` threads; results keep task order.
std::vector<BatchResult> run_batch(const std::vector<BatchTask>& tasks, int jobs);

}  // namespace gfm::sim
