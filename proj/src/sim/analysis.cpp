#include "gfm/error.hpp"
#include "gfm/sim.hpp"
#include "gfm/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace gfm::sim {

using plant::Dq;

const std::array<std::string, channel_count>& channel_names() {
    static const std::array<std::string, channel_count> names{
        "f_on",    "f_off",   "f_wtg",   "P_ac_on", "P_dc_on", "P_ac_off", "P_dc_off", "P_gsc",   "P_msc",
        "W_t_on",  "W_t_off", "W_link",  "U_dc_on", "U_mid",   "U_dc_off", "I_dc_on",  "I_dc_off"};
    return names;
}

linsys::TimeSeries SimLog::series(Channel c) const { return {t, data[c]}; }

void SimLog::push(double time, const std::array<double, channel_count>& row) {
    t.push_back(time);
    for (std::size_t c = 0; c < channel_count; ++c) data[c].push_back(row[c]);
}

void write_csv(std::ostream& os, const SimLog& log) {
    os << 't';
    for (const auto& n : channel_names()) os << ',' << n;
    os << '\n';
    char buf[32];
    for (std::size_t k = 0; k < log.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9f", log.t[k]);
        os << buf;
        for (std::size_t c = 0; c < channel_count; ++c) {
            std::snprintf(buf, sizeof buf, ",%.12g", log.data[c][k]);
            os << buf;
        }
        os << '\n';
    }
}

SimLog read_csv(std::istream& is) {
    SimLog log;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (!header) {
            bool ok = cells.size() == channel_count + 1 && cells[0] == "t";
            for (std::size_t c = 0; ok && c < channel_count; ++c) ok = cells[c + 1] == channel_names()[c];
            if (!ok) throw Error(ErrorCode::invalid_input, "log CSV: unexpected header");
            header = true;
            continue;
        }
        if (cells.size() != channel_count + 1) {
            throw Error(ErrorCode::invalid_input, "log CSV: wrong column count on line " + std::to_string(line_no));
        }
        std::array<double, channel_count> row{};
        double time = 0.0;
        try {
            time = std::stod(cells[0]);
            for (std::size_t c = 0; c < channel_count; ++c) row[c] = std::stod(cells[c + 1]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_input, "log CSV: bad number on line " + std::to_string(line_no));
        }
        log.push(time, row);
    }
    if (!header) throw Error(ErrorCode::invalid_input, "log CSV: missing header");
    if (log.size() >= 2) {
        const double dt = log.t[1] - log.t[0];
        log.decimation = std::max(1, static_cast<int>(std::lround(dt / 50e-6)));
    }
    return log;
}

// ----------------------------------------------------------------- metrics

namespace {

double mean_from(const std::vector<double>& t, const std::vector<double>& y, double t_from) {
    const auto first = std::lower_bound(t.begin(), t.end(), t_from) - t.begin();
    double sum = 0.0;
    std::size_t n = 0;
    for (auto k = static_cast<std::size_t>(first); k < t.size(); ++k, ++n) sum += y[k];
    if (n == 0) throw Error(ErrorCode::metric, "no samples in the averaging window");
    return sum / static_cast<double>(n);
}

// value just before the event, or the first sample when the log starts at the event
double value_before(const std::vector<double>& t, const std::vector<double>& y, double event_time) {
    const auto it = std::lower_bound(t.begin(), t.end(), event_time);
    const auto k = static_cast<std::size_t>(it - t.begin());
    if (k == 0) return y.front();
    if (k < t.size() && t[k] == event_time) return y[k];
    return y[k - 1];
}

void check_window(const std::vector<double>& t, double event_time) {
    if (t.size() < 2) throw Error(ErrorCode::metric, "log has fewer than two samples");
    if (event_time < t.front() || event_time >= t.back()) {
        throw Error(ErrorCode::metric, "event time outside the logged interval");
    }
    if (t.back() - event_time < 1.0) throw Error(ErrorCode::metric, "log ends less than 1 s after the event");
}

}  // namespace

Metrics frequency_metrics(const linsys::TimeSeries& f, double event_time, double rocof_window,
                          double settling_band) {
    check_window(f.t, event_time);
    if (!(rocof_window > 0.0)) throw Error(ErrorCode::metric, "RoCoF window must be > 0");
    Metrics m;
    m.event_time = event_time;
    m.f_initial = value_before(f.t, f.y, event_time);
    const auto first = static_cast<std::size_t>(std::lower_bound(f.t.begin(), f.t.end(), event_time) - f.t.begin());
    const double t_end = f.t.back();

    m.f_nadir = *std::min_element(f.y.begin() + static_cast<std::ptrdiff_t>(first), f.y.end());

    double rocof = 0.0;
    for (std::size_t k = first; k < f.size() && f.t[k] + rocof_window <= t_end + 1e-12; ++k) {
        const double slope = (f.at(f.t[k] + rocof_window) - f.y[k]) / rocof_window;
        if (std::abs(slope) > std::abs(rocof)) rocof = slope;
    }
    m.max_rocof = rocof;

    const double f_final = mean_from(f.t, f.y, t_end - 1.0);
    m.steady_delta_f_on = f_final - m.f_initial;
    const double band = settling_band * std::abs(m.steady_delta_f_on);
    m.settling_time = 0.0;
    for (std::size_t k = f.size(); k-- > first;) {
        if (std::abs(f.y[k] - f_final) > band) {
            m.settling_time = (k + 1 < f.size() ? f.t[k + 1] : t_end) - event_time;
            break;
        }
    }
    return m;
}

Metrics compute_metrics(const SimLog& log, double event_time, double rocof_window, double settling_band) {
    Metrics m = frequency_metrics(log.series(f_on), event_time, rocof_window, settling_band);
    const double t_avg = log.t.back() - 1.0;
    m.steady_delta_f_off = mean_from(log.t, log[f_off], t_avg) - value_before(log.t, log[f_off], event_time);
    m.steady_delta_f_wtg = mean_from(log.t, log[f_wtg], t_avg) - value_before(log.t, log[f_wtg], event_time);
    for (Channel c : {P_ac_on, P_dc_on, P_dc_off, P_ac_off, P_gsc, P_msc}) {
        m.steady_power_chain.push_back(mean_from(log.t, log[c], t_avg));
    }
    return m;
}

// --------------------------------------------------------------- invariants

double energy_error(const SimLog& log, Channel energy, Channel p_in, Channel p_out, double t_from) {
    const auto first = static_cast<std::size_t>(std::lower_bound(log.t.begin(), log.t.end(), t_from) - log.t.begin());
    if (log.size() < first + 2) throw Error(ErrorCode::metric, "energy check needs at least two samples");
    const auto& W = log[energy];
    const auto& a = log[p_in];
    const auto& b = log[p_out];
    double net = 0.0, gross = 0.0, scale = 0.0;
    for (std::size_t k = first + 1; k < log.size(); ++k) {
        const double h = log.t[k] - log.t[k - 1];
        const double d0 = a[k - 1] - b[k - 1];
        const double d1 = a[k] - b[k];
        net += 0.5 * h * (d0 + d1);
        gross += 0.5 * h * (std::abs(d0) + std::abs(d1));
        scale += 0.5 * h * (std::abs(a[k - 1]) + std::abs(a[k]));
    }
    const double dW = W.back() - W[first];
    // an idle balance has a vanishing denominator; floor it at 1 ppm of the throughput
    return std::abs(dW - net) / std::max(gross, 1e-6 * scale + 1e-12);
}

InvariantReport verify_invariants(const SimLog& log, const InvariantContext& ctx) {
    InvariantReport rep;
    auto add = [&](std::string name, double value, double tol) {
        const bool pass = std::isfinite(value) && value <= tol;
        rep.checks.push_back({std::move(name), value, tol, pass});
        rep.pass = rep.pass && pass;
    };
    const double t0 = log.t.front();
    add("energy W_t_on", energy_error(log, W_t_on, P_dc_on, P_ac_on, t0), ctx.energy_tolerance);
    add("energy W_t_off", energy_error(log, W_t_off, P_ac_off, P_dc_off, t0), ctx.energy_tolerance);
    add("energy W_link", energy_error(log, W_link, P_msc, P_gsc, t0), ctx.energy_tolerance);

    const double t_avg = log.t.back() - 1.0;
    auto mean = [&](Channel c) { return mean_from(log.t, log[c], t_avg); };
    const double P_ref = std::max(std::abs(mean(P_msc)), 1.0);
    add("chain P_msc = P_gsc", std::abs(mean(P_msc) - mean(P_gsc)) / P_ref, ctx.chain_tolerance);
    add("chain P_ac_off = P_dc_off", std::abs(mean(P_ac_off) - mean(P_dc_off)) / P_ref, ctx.chain_tolerance);
    add("chain P_dc_on = P_ac_on", std::abs(mean(P_dc_on) - mean(P_ac_on)) / P_ref, ctx.chain_tolerance);
    // losses are non-negative: a negative loss shows up as a positive value here
    add("losses offshore AC", std::max(0.0, mean(P_ac_off) - mean(P_gsc)) / P_ref, ctx.chain_tolerance);
    add("losses DC", std::max(0.0, mean(P_dc_on) - mean(P_dc_off)) / P_ref, ctx.chain_tolerance);

    const double d_on = mean(f_on) - value_before(log.t, log[f_on], ctx.event_time);
    const double d_off = mean(f_off) - value_before(log.t, log[f_off], ctx.event_time);
    const double lhs = ctx.K_R_on * d_on;
    const double rhs = ctx.K_R_off * d_off;
    const double denom = std::abs(lhs);
    // below 1 mHz of deviation the droop balance is not resolvable
    const double droop_err = std::abs(d_on) < 1e-3 ? 0.0 : std::abs(lhs - rhs) / denom;
    add("droop closure", droop_err, ctx.droop_tolerance);
    return rep;
}

// ----------------------------------------------------------------- harness

AngleStepResult thevenin_angle_step(const SystemParams& sys, const ControllerGains& gains, double step,
                                    double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end > dt)) throw Error(ErrorCode::invalid_input, "angle step: need 0 < dt < t_end");
    const auto link = onshore_link(sys);
    const double P = sys.owpp.P_set;
    double delta = 0.0;
    const auto gpac = tuning::link_gpac(link, P, sys.mmc_on.U_N, sys.S_N, sys.f_N, gains.mmc_on.R_v,
                                        gains.mmc_on.T_v, &delta);
    const double w = link.omega1;
    const double R_v = gains.mmc_on.R_v;
    const double T_v = gains.mmc_on.T_v;

    using Cx = std::complex<double>;
    const Cx i0c = (std::polar(link.U, delta) - Cx(link.E, 0.0)) / Cx(link.R, w * link.L);
    const Dq i0{i0c.real(), i0c.imag()};

    // state: current in the grid frame and the low-pass of the converter-frame current
    struct X {
        Dq i, lp;
    };
    auto voltage = [&](const X& x) {
        const Dq ic = plant::rotate(x.i, -delta);
        const Dq hp = ic - x.lp;
        return plant::rotate(Dq{link.U - R_v * hp.d, -R_v * hp.q}, delta);
    };
    const Dq e = plant::polar_dq(link.E, step);
    auto f = [&](const X& x) {
        const Dq u = voltage(x);
        const Dq ic = plant::rotate(x.i, -delta);
        return X{plant::ac_branch_derivative(link.R, link.L, w, x.i, u, e), (1.0 / T_v) * (ic - x.lp)};
    };

    X x{i0, plant::rotate(i0, -delta)};
    const double P0 = plant::ac_power(voltage(x), x.i);
    AngleStepResult r;
    const auto n = static_cast<long long>(std::llround(t_end / dt));
    const long long stride = std::max(1LL, n / 20000);
    for (long long k = 0; k <= n; ++k) {
        if (k % stride == 0) {
            r.nonlinear.t.push_back(static_cast<double>(k) * dt);
            r.nonlinear.y.push_back(plant::ac_power(voltage(x), x.i) - P0);
        }
        // midpoint rule
        const X k1 = f(x);
        const X xm{x.i + (0.5 * dt) * k1.i, x.lp + (0.5 * dt) * k1.lp};
        const X k2 = f(xm);
        x = X{x.i + dt * k2.i, x.lp + dt * k2.lp};
    }
    r.linear = linsys::step_response(gpac, t_end, std::max(dt, 1e-5));
    for (auto& y : r.linear.y) y *= -step;
    auto peak = [](const std::vector<double>& y) {
        double p = 0.0;
        for (double v : y) p = std::abs(v) > std::abs(p) ? v : p;
        return p;
    };
    r.peak_nonlinear = peak(r.nonlinear.y);
    r.peak_linear = peak(r.linear.y);
    return r;
}

// ------------------------------------------------------------------- batch

std::vector<BatchResult> run_batch(const std::vector<BatchTask>& tasks, int jobs) {
    std::vector<BatchResult> out(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
            try {
                out[k].log = run(tasks[k].sys, tasks[k].gains, tasks[k].scenario);
            } catch (const Error& e) {
                out[k].error = e.what();
                out[k].diverged = e.code() == ErrorCode::divergence ||
                                  (e.code() == ErrorCode::initialization &&
                                   std::string(e.what()).find("diverged") != std::string::npos);
            } catch (const std::exception& e) {
                out[k].error = e.what();
            }
        }
    };
    const auto n = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < std::min(n, tasks.size()); ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace gfm::sim
