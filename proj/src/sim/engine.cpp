#include "gfm/error.hpp"
#include "gfm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace gfm::sim {

using plant::Dq;
using Cx = std::complex<double>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kLineSubsteps = 10;

Dq to_dq(Cx c) { return {c.real(), c.imag()}; }

double relative_angle(double theta_unwrapped, double omega_N, double t) {
    return std::remainder(theta_unwrapped - omega_N * t, kTwoPi);
}

}  // namespace

const std::vector<std::string>& setpoint_targets() {
    static const std::vector<std::string> names{"P_set", "P_load", "U_mid_star", "K_Rw", "K_Hw"};
    return names;
}

void Scenario::validate() const {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_input, "scenario dt must be > 0");
    if (!(settle_time >= 0.0)) throw Error(ErrorCode::invalid_input, "scenario settle_time must be >= 0");
    if (!(duration > settle_time)) throw Error(ErrorCode::invalid_input, "scenario duration must exceed settle_time");
    if (!full_rate_log && !(log_rate > 0.0)) throw Error(ErrorCode::invalid_input, "scenario log_rate must be > 0");
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& e = events[k];
        if (e.t < settle_time) {
            throw Error(ErrorCode::invalid_input, "event at t = " + std::to_string(e.t) + " precedes the settle time");
        }
        if (k > 0 && e.t < events[k - 1].t) throw Error(ErrorCode::invalid_input, "events must be sorted by time");
        if (e.kind == EventKind::setpoint_change) {
            const auto& names = setpoint_targets();
            if (std::find(names.begin(), names.end(), e.target) == names.end()) {
                throw Error(ErrorCode::invalid_input, "unknown setpoint target '" + e.target + "'");
            }
        }
        if (!std::isfinite(e.value)) throw Error(ErrorCode::invalid_input, "event value must be finite");
    }
}

double Scenario::first_event_time() const {
    if (events.empty()) throw Error(ErrorCode::metric, "scenario has no events");
    return events.front().t;
}

Scenario benchmark_scenario(const SystemParams& sys) {
    Scenario s;
    s.duration = 20.0;
    s.dt = 50e-6;
    s.settle_time = 5.0;
    s.events = {{6.0, EventKind::onshore_load_step, 0.05 * sys.onshore.machine.S_base, ""}};
    return s;
}

void apply_preset(ControllerGains& g, const SystemParams& sys, FrequencyPreset preset) {
    switch (preset) {
        case FrequencyPreset::none:
            g.wtg.K_Rw = 0.0;
            g.wtg.K_Hw = 0.0;
            break;
        case FrequencyPreset::fcr:
            // 5 % droop on the OWPP rating
            g.wtg.K_Rw = sys.S_N / (0.05 * sys.f_N);
            g.wtg.K_Hw = 0.0;
            break;
        case FrequencyPreset::inertia:
            // 2H = 4 s on the OWPP rating, less what the DC link delivers by itself
            g.wtg.K_Rw = 0.0;
            g.wtg.K_Hw = 4.0 * sys.S_N / sys.f_N - 1.0 / g.wtg.K_Hlink;
            break;
    }
}

FrequencyPreset parse_preset(const std::string& name) {
    if (name == "none") return FrequencyPreset::none;
    if (name == "fcr") return FrequencyPreset::fcr;
    if (name == "inertia") return FrequencyPreset::inertia;
    throw Error(ErrorCode::invalid_input, "unknown frequency preset '" + name + "'");
}

Dispatch default_dispatch(const SystemParams& sys) { return {sys.owpp.P_set, sys.onshore.P_load}; }

// ------------------------------------------------------------------ engine

struct Simulation::Derivs {
    plant::SyncMachineDerivative machine;
    Dq di_on;
    double dI_on{}, dW_on{};
    double dI_off{}, dW_off{};
    plant::WtgDerivative wtg;
    plant::HvdcLineDerivative line;
    double P_MSC_cmd{};
    double P_gsc{};
};

Simulation::Simulation(SystemParams sys, ControllerGains gains) : sys_(std::move(sys)), gains_(std::move(gains)) {
    sys_.validate();
    gains_.mmc_on.validate();
    gains_.mmc_off.validate();
    gains_.wtg.validate();
    wtg_ = offshore_wtg_params(sys_);
}

void Simulation::presolve(const Dispatch& d) {
    const double n = sys_.offshore_ratio();
    const double wN = sys_.omega_N();
    P_load_ = d.P_load;
    gains_.wtg.P_set = d.P_set;

    // offshore AC: the WTG exports P_set against the offshore MMC voltage at angle 0
    const auto wl = wtg_link(sys_);
    const auto base_w = acpower::per_unit_base(sys_.S_N, sys_.owpp.U_N, sys_.f_N);
    const double delta_w = acpower::solve_delta_for_power(acpower::to_per_unit(wl, base_w), d.P_set / sys_.S_N);
    const Cx z_w(wtg_.R_w(), wN * wtg_.L_w());
    const Cx u_w = std::polar(sys_.owpp.U_ac, delta_w);
    const Cx u_off(sys_.mmc_off.U_ac, 0.0);
    const Cx i_w = (u_w - u_off / n) / z_w;
    const Cx i_s_off = -i_w / n;
    const double P_ac_off_out = 1.5 * std::real(u_off * std::conj(i_s_off));

    // DC: P_into = (U_mid - (R_dc/2 + R_d) I) I at the offshore end, I into the converter
    const double U_mid = gains_.mmc_off.U_mid_star;
    const double a = 0.5 * sys_.line.R_dc + sys_.mmc_off.converter.R_d;
    const double disc = U_mid * U_mid - 4.0 * a * P_ac_off_out;
    if (!(disc >= 0.0)) throw Error(ErrorCode::infeasible, "no DC operating point for the dispatch");
    // smaller root, written to stay finite as a -> 0
    const double I_off_into = 2.0 * P_ac_off_out / (U_mid + std::sqrt(disc));
    const double I_line = -I_off_into;
    auto& L = x_.line;
    L.U_mid = U_mid;
    L.U_dc_off = U_mid + 0.5 * sys_.line.R_dc * I_line;
    L.U_dc_on = U_mid - 0.5 * sys_.line.R_dc * I_line;
    L.i_sec1 = I_line;
    L.i_sec2 = I_line;
    const double I_on_into = I_line;
    const double P_dc_on = (L.U_dc_on - sys_.mmc_on.converter.R_d * I_on_into) * I_on_into;

    // onshore AC
    const auto ol = onshore_link(sys_);
    const auto base_on = acpower::per_unit_base(sys_.S_N, sys_.mmc_on.U_N, sys_.f_N);
    const double delta_on = acpower::solve_delta_for_power(acpower::to_per_unit(ol, base_on), P_dc_on / sys_.S_N);
    const Cx z_on(ol.R, wN * ol.L);
    const Cx u_on = std::polar(sys_.mmc_on.U_ac, delta_on);
    const Cx e_th(sys_.onshore.U_th, 0.0);
    const Cx i_on = (u_on - e_th) / z_on;
    const double P_into_source = 1.5 * std::real(e_th * std::conj(i_on));

    x_.machine = {0.0, 1.0, P_load_ - P_into_source};
    P_machine_set_ = x_.machine.P_m;

    x_.mmc_on = {to_dq(i_on), I_on_into, gains_.mmc_on.W_t_star};
    x_.mmc_off = {Dq{}, I_off_into, gains_.mmc_off.W_t_star};
    x_.wtg = {to_dq(i_w), gains_.wtg.W_link_star, d.P_set};
    P_gsc_last_ = d.P_set;

    theta_on_ = delta_on;
    theta_off_ = 0.0;
    theta_w_ = delta_w;

    const double u_sum0_on = 0.5 * (L.U_dc_on - sys_.mmc_on.converter.R_d * I_on_into);
    const double u_sum0_off = 0.5 * (L.U_dc_off - sys_.mmc_off.converter.R_d * I_off_into);
    control::mmc_controller_equilibrium(
        gains_.mmc_on, c_on_,
        {gains_.mmc_on.W_t_star, plant::rotate(to_dq(i_on), -delta_on), L.U_dc_on, I_on_into, sys_.mmc_on.U_ac},
        delta_on, u_sum0_on);
    control::mmc_controller_equilibrium(
        gains_.mmc_off, c_off_,
        {gains_.mmc_off.W_t_star, to_dq(i_s_off), L.U_dc_off, I_off_into, sys_.mmc_off.U_ac}, 0.0, u_sum0_off);
    const double U_link = plant::wtg_link_voltage(wtg_, gains_.wtg.W_link_star);
    const double I_dc_link = d.P_set / U_link;
    control::WtgMeasurements wm;
    wm.W_link = gains_.wtg.W_link_star;
    wm.U_link = U_link;
    wm.I_MSC = I_dc_link;
    wm.I_GSC = I_dc_link;
    wm.i_w = plant::rotate(to_dq(i_w), -delta_w);
    wm.U_ac_setpoint = sys_.owpp.U_ac;
    wm.remote_f_on = sys_.f_N;
    control::wtg_controller_equilibrium(gains_.wtg, c_w_, wm, delta_w);

    steps_ = 0;
    t0_ = 0.0;
    initialized_ = true;
}

void Simulation::initialize(const Dispatch& dispatch, double settle_time, double dt) {
    presolve(dispatch);
    set_step(dt);
    const auto n = static_cast<long long>(std::llround(settle_time / dt));
    try {
        for (long long k = 0; k < n; ++k) step();
    } catch (const Error& e) {
        const auto code = e.code() == ErrorCode::divergence ? ErrorCode::divergence : ErrorCode::initialization;
        throw Error(code, std::string("settle run failed: ") + e.what());
    }
    const double r = residual();
    if (!(r < 1e-6)) {
        std::ostringstream os;
        os << "settle run did not converge: residual " << r << " of nominal rates";
        throw Error(ErrorCode::initialization, os.str());
    }
}

void Simulation::set_step(double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_input, "dt must be > 0");
    t0_ = time();
    steps_ = 0;
    dt_ = dt;
}

void Simulation::apply(const Event& ev) {
    switch (ev.kind) {
        case EventKind::onshore_load_step: P_load_ += ev.value; break;
        case EventKind::wind_power_step: gains_.wtg.P_set += ev.value; break;
        case EventKind::setpoint_change:
            if (ev.target == "P_set") gains_.wtg.P_set = ev.value;
            else if (ev.target == "P_load") P_load_ = ev.value;
            else if (ev.target == "U_mid_star") gains_.mmc_on.U_mid_star = gains_.mmc_off.U_mid_star = ev.value;
            else if (ev.target == "K_Rw") gains_.wtg.K_Rw = ev.value;
            else if (ev.target == "K_Hw") gains_.wtg.K_Hw = ev.value;
            else throw Error(ErrorCode::invalid_input, "unknown setpoint target '" + ev.target + "'");
            break;
    }
}

namespace {

struct ControllerSnapshot {
    control::MmcControllerState on, off;
    control::WtgControllerState w;
    double th_on{}, th_off{}, th_w{};
};

}  // namespace

// One evaluation of controllers and plant derivatives at the current state.
// Controller states are advanced; callers that only inspect restore them.
Simulation::Derivs Simulation::derivatives(std::array<double, channel_count>* row) {
    const double n = sys_.offshore_ratio();
    const double wN = sys_.omega_N();
    const double t_next = static_cast<double>(steps_ + 1) * dt_ + t0_;
    const auto& mon = sys_.mmc_on.converter;
    const auto& moff = sys_.mmc_off.converter;
    const auto& L = x_.line;

    // onshore MMC
    control::MmcMeasurements m_on{x_.mmc_on.W_t, plant::rotate(x_.mmc_on.i_s, -theta_on_), L.U_dc_on, x_.mmc_on.I_dc,
                                  sys_.mmc_on.U_ac};
    const auto a_on = control::mmc_control_step(gains_.mmc_on, c_on_, m_on, dt_);
    theta_on_ = relative_angle(a_on.theta_unwrapped, wN, t_next);
    const Dq u_on = plant::rotate(a_on.u_diff_cmd, theta_on_);

    // offshore MMC, its AC current is the referred WTG branch current
    const Dq i_s_off = (-1.0 / n) * x_.wtg.i_w;
    control::MmcMeasurements m_off{x_.mmc_off.W_t, plant::rotate(i_s_off, -theta_off_), L.U_dc_off, x_.mmc_off.I_dc,
                                   sys_.mmc_off.U_ac};
    const auto a_off = control::mmc_control_step(gains_.mmc_off, c_off_, m_off, dt_);
    theta_off_ = relative_angle(a_off.theta_unwrapped, wN, t_next);
    const Dq u_off = plant::rotate(a_off.u_diff_cmd, theta_off_);

    // WTG
    const double U_link = plant::wtg_link_voltage(wtg_, x_.wtg.W_link);
    control::WtgMeasurements m_w;
    m_w.W_link = x_.wtg.W_link;
    m_w.U_link = U_link;
    m_w.I_MSC = x_.wtg.P_MSC / U_link;
    m_w.I_GSC = P_gsc_last_ / U_link;  // DC current drawn over the previous step
    m_w.i_w = plant::rotate(x_.wtg.i_w, -theta_w_);
    m_w.U_ac_setpoint = sys_.owpp.U_ac;
    m_w.remote_f_on = x_.machine.omega_pu * sys_.f_N;
    const auto a_w = control::wtg_control_step(gains_.wtg, c_w_, m_w, dt_);
    theta_w_ = relative_angle(a_w.theta_unwrapped, wN, t_next);
    const Dq u_gsc = plant::rotate(a_w.u_gsc_cmd, theta_w_);

    Derivs d;
    // onshore AC through the converter branch and the Thevenin impedance
    const plant::TheveninGrid grid{sys_.onshore.U_th, sys_.onshore.R_th, sys_.onshore.L_th,
                                   plant::FrequencySource::machine};
    d.di_on = plant::mmc_ac_derivative(mon, x_.mmc_on, u_on, grid, 0.0, x_.machine.delta, wN);
    const Dq u_th = plant::polar_dq(sys_.onshore.U_th, x_.machine.delta);
    const double P_e = P_load_ - plant::ac_power(u_th, x_.mmc_on.i_s);
    d.machine = plant::sync_machine_derivative(sys_.onshore.machine, x_.machine, P_e, P_machine_set_);

    const double P_ac_on_out = plant::ac_power(u_on, x_.mmc_on.i_s);
    const double P_dc_on_in = plant::mmc_dc_power(a_on.u_sum0_cmd, x_.mmc_on.I_dc);
    d.dI_on = plant::mmc_dc_derivative(mon, x_.mmc_on, a_on.u_sum0_cmd, L.U_dc_on);
    d.dW_on = plant::mmc_energy_derivative(P_dc_on_in, P_ac_on_out);

    const double P_ac_off_out = plant::ac_power(u_off, i_s_off);
    const double P_dc_off_in = plant::mmc_dc_power(a_off.u_sum0_cmd, x_.mmc_off.I_dc);
    d.dI_off = plant::mmc_dc_derivative(moff, x_.mmc_off, a_off.u_sum0_cmd, L.U_dc_off);
    d.dW_off = plant::mmc_energy_derivative(P_dc_off_in, P_ac_off_out);

    d.P_MSC_cmd = a_w.P_MSC_cmd;
    d.wtg = plant::wtg_derivative(wtg_, x_.wtg, u_gsc, (1.0 / n) * u_off, wN, a_w.P_MSC_cmd);
    d.line = plant::hvdc_line_derivative(sys_.line, L, -x_.mmc_on.I_dc, -x_.mmc_off.I_dc);

    d.P_gsc = plant::ac_power(u_gsc, x_.wtg.i_w);
    if (row) {
        auto& r = *row;
        r[f_on] = gains_.mmc_on.f_star + c_on_.delta_f;
        r[f_off] = gains_.mmc_off.f_star + c_off_.delta_f;
        r[f_wtg] = gains_.wtg.f_star + c_w_.delta_f_wtg;
        r[P_ac_on] = P_ac_on_out;
        r[P_dc_on] = P_dc_on_in;
        r[P_ac_off] = -P_ac_off_out;
        r[P_dc_off] = -P_dc_off_in;
        r[P_gsc] = d.P_gsc;
        r[P_msc] = x_.wtg.P_MSC;
        r[W_t_on] = x_.mmc_on.W_t;
        r[W_t_off] = x_.mmc_off.W_t;
        r[W_link] = x_.wtg.W_link;
        r[U_dc_on] = L.U_dc_on;
        r[U_mid] = L.U_mid;
        r[U_dc_off] = L.U_dc_off;
        r[I_dc_on] = x_.mmc_on.I_dc;
        r[I_dc_off] = -x_.mmc_off.I_dc;
    }
    return d;
}

std::array<double, channel_count> Simulation::step() {
    if (!initialized_) throw Error(ErrorCode::initialization, "simulation stepped before initialization");
    std::array<double, channel_count> row{};
    const double I_on_inj = -x_.mmc_on.I_dc;
    const double I_off_inj = -x_.mmc_off.I_dc;
    const Derivs d = derivatives(&row);
    const double h = dt_;

    auto& m = x_.machine;
    m.delta += h * d.machine.delta;
    m.omega_pu += h * d.machine.omega_pu;
    m.P_m += h * d.machine.P_m;

    x_.mmc_on.i_s = x_.mmc_on.i_s + h * d.di_on;
    x_.mmc_on.I_dc += h * d.dI_on;
    x_.mmc_on.W_t += h * d.dW_on;
    x_.mmc_off.I_dc += h * d.dI_off;
    x_.mmc_off.W_t += h * d.dW_off;

    x_.wtg.i_w = x_.wtg.i_w + h * d.wtg.i_w;
    x_.wtg.W_link += h * d.wtg.W_link;
    if (wtg_.T_msc > 0.0) x_.wtg.P_MSC += h * d.wtg.P_MSC;
    else x_.wtg.P_MSC = d.P_MSC_cmd;

    // The line's LC mode (about 1.9e3 rad/s, lightly damped) is outside the
    // explicit-Euler stability region at 50 us, so the line takes sub-steps
    // with the converter injections held.
    auto& L = x_.line;
    const double hs = h / kLineSubsteps;
    for (int j = 0; j < kLineSubsteps; ++j) {
        const auto dl = j == 0 ? d.line : plant::hvdc_line_derivative(sys_.line, L, I_on_inj, I_off_inj);
        L.U_dc_on += hs * dl.U_dc_on;
        L.U_mid += hs * dl.U_mid;
        L.U_dc_off += hs * dl.U_dc_off;
        L.i_sec1 += hs * dl.i_sec1;
        L.i_sec2 += hs * dl.i_sec2;
    }

    P_gsc_last_ = d.P_gsc;
    ++steps_;
    check_divergence();
    return row;
}

void Simulation::check_divergence() const {
    const auto base_on = acpower::per_unit_base(sys_.S_N, sys_.mmc_on.U_N, sys_.f_N);
    const auto base_w = acpower::per_unit_base(sys_.S_N, sys_.owpp.U_N, sys_.f_N);
    const double I_dc_nom = sys_.S_N / sys_.U_dc_nom;
    const double lim = 1e12;
    const std::pair<double, double> checks[] = {
        {x_.machine.delta, 1.0},
        {x_.machine.omega_pu, 1.0},
        {x_.machine.P_m, sys_.onshore.machine.S_base},
        {std::hypot(x_.mmc_on.i_s.d, x_.mmc_on.i_s.q), base_on.I_b},
        {x_.mmc_on.I_dc, I_dc_nom},
        {x_.mmc_on.W_t, sys_.mmc_on.converter.W_t_nom},
        {x_.mmc_off.I_dc, I_dc_nom},
        {x_.mmc_off.W_t, sys_.mmc_off.converter.W_t_nom},
        {std::hypot(x_.wtg.i_w.d, x_.wtg.i_w.q), base_w.I_b},
        {x_.wtg.W_link, gains_.wtg.W_link_star},
        {x_.wtg.P_MSC, sys_.S_N},
        {x_.line.U_dc_on, sys_.U_dc_nom},
        {x_.line.U_mid, sys_.U_dc_nom},
        {x_.line.U_dc_off, sys_.U_dc_nom},
        {x_.line.i_sec1, I_dc_nom},
        {x_.line.i_sec2, I_dc_nom},
    };
    for (const auto& [v, nom] : checks) {
        if (!std::isfinite(v) || std::abs(v) > lim * nom) {
            std::ostringstream os;
            os << "state diverged at t = " << time() << " s";
            throw Error(ErrorCode::divergence, os.str());
        }
    }
}

double Simulation::residual() const {
    // evaluate on a copy so that controller states are left untouched
    Simulation copy = *this;
    const Derivs d = copy.derivatives(nullptr);
    const double wN = sys_.omega_N();
    const auto base_on = acpower::per_unit_base(sys_.S_N, sys_.mmc_on.U_N, sys_.f_N);
    const auto base_w = acpower::per_unit_base(sys_.S_N, sys_.owpp.U_N, sys_.f_N);
    const double I_dc_nom = sys_.S_N / sys_.U_dc_nom;
    const double U = sys_.U_dc_nom;
    // each derivative over nominal value times omega_N
    const double r[] = {
        std::abs(d.machine.delta) / wN,
        std::abs(d.machine.omega_pu) / wN,
        std::abs(d.machine.P_m) / (sys_.onshore.machine.S_base * wN),
        std::hypot(d.di_on.d, d.di_on.q) / (base_on.I_b * wN),
        std::abs(d.dI_on) / (I_dc_nom * wN),
        std::abs(d.dW_on) / (sys_.mmc_on.converter.W_t_nom * wN),
        std::abs(d.dI_off) / (I_dc_nom * wN),
        std::abs(d.dW_off) / (sys_.mmc_off.converter.W_t_nom * wN),
        std::hypot(d.wtg.i_w.d, d.wtg.i_w.q) / (base_w.I_b * wN),
        std::abs(d.wtg.W_link) / (gains_.wtg.W_link_star * wN),
        std::abs(d.wtg.P_MSC) / (sys_.S_N * wN),
        std::abs(d.line.U_dc_on) / (U * wN),
        std::abs(d.line.U_mid) / (U * wN),
        std::abs(d.line.U_dc_off) / (U * wN),
        std::abs(d.line.i_sec1) / (I_dc_nom * wN),
        std::abs(d.line.i_sec2) / (I_dc_nom * wN),
    };
    return *std::max_element(std::begin(r), std::end(r));
}

SimLog Simulation::run_until(double t_end, const std::vector<Event>& events, int decimation) {
    if (decimation < 1) throw Error(ErrorCode::invalid_input, "decimation must be >= 1");
    SimLog log;
    log.decimation = decimation;
    const auto n_end = static_cast<long long>(std::llround((t_end - t0_) / dt_));
    log.t.reserve(static_cast<std::size_t>((n_end - steps_) / decimation + 2));
    std::size_t next = 0;
    for (const long long start = steps_; steps_ < n_end;) {
        const double t = time();
        while (next < events.size() && t >= events[next].t - 1e-9 * dt_) apply(events[next++]);
        const bool keep = (steps_ - start) % decimation == 0;
        const auto row = step();
        if (keep) log.push(t, row);
    }
    return log;
}

SimLog run(const SystemParams& sys, const ControllerGains& gains, const Scenario& scenario) {
    scenario.validate();
    Simulation s(sys, gains);
    s.initialize(default_dispatch(sys), scenario.settle_time, scenario.dt);
    int dec = 1;
    if (!scenario.full_rate_log) {
        dec = std::max(1, static_cast<int>(std::ceil(1.0 / (scenario.dt * scenario.log_rate) - 1e-9)));
    }
    return s.run_until(scenario.duration, scenario.events, dec);
}

}  // namespace gfm::sim
