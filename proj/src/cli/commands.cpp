#include "gfm/cli.hpp"

#include "gfm/acceptance.hpp"
#include "gfm/error.hpp"
#include "gfm/sim.hpp"
#include "gfm/tuning.hpp"

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

namespace gfm::cli {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::config:
        case ErrorCode::invalid_input: return exit_usage;
        case ErrorCode::divergence: return exit_divergence;
        default: return exit_failure;
    }
}

// Runs a command body and maps library errors onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "gfmsim: " << to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "gfmsim: " << e.what() << "\n";
        return exit_failure;
    }
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
    if (o.out.empty()) {
        out << text;
    } else {
        config::write_file_atomic(o.out, text);
        spdlog::info("wrote {}", o.out);
    }
}

struct Setup {
    config::Config cfg;
    ControllerGains gains;
};

// Config plus gains, either read from --gains or tuned from the config.
Setup load_setup(const Options& o, std::ostream& err) {
    Setup s{config::load_config(o.config), {}};
    if (o.dt) s.cfg.scenario.dt = *o.dt;
    if (o.gains.empty()) {
        spdlog::info("tuning from {}", o.config.empty() ? "benchmark defaults" : o.config);
        s.gains = tuning::tune_system(s.cfg.sys, s.cfg.tuning).gains;
    } else {
        const auto file = config::load_gains(o.gains);
        if (std::abs(file.P_set - s.cfg.sys.owpp.P_set) > 1e-9 * std::max(1.0, std::abs(file.P_set))) {
            err << "gfmsim: warning: gains were tuned at P_set = " << file.P_set << " W, config dispatches "
                << s.cfg.sys.owpp.P_set << " W\n";
        }
        s.gains = file.gains;
    }
    return s;
}

sim::FrequencyPreset scenario_preset(const Options& o, const config::Config& cfg) {
    if (o.scenario == "custom") return cfg.preset;
    if (o.scenario == "fcr" || o.scenario == "inertia") return sim::parse_preset(o.scenario);
    throw Error(ErrorCode::config, "unknown scenario '" + o.scenario + "' (expected fcr, inertia or custom)");
}

nlohmann::json metrics_json(const sim::Metrics& m) {
    static const char* chain[] = {"P_ac_on", "P_dc_on", "P_dc_off", "P_ac_off", "P_gsc", "P_msc"};
    nlohmann::json j{{"event_time_s", m.event_time},
                     {"f_initial_hz", m.f_initial},
                     {"f_nadir_hz", m.f_nadir},
                     {"max_rocof_hz_per_s", m.max_rocof},
                     {"settling_time_s", m.settling_time},
                     {"steady_delta_f_on_hz", m.steady_delta_f_on},
                     {"steady_delta_f_off_hz", m.steady_delta_f_off},
                     {"steady_delta_f_wtg_hz", m.steady_delta_f_wtg}};
    for (std::size_t k = 0; k < m.steady_power_chain.size() && k < 6; ++k) {
        j["steady_power_w"][chain[k]] = m.steady_power_chain[k];
    }
    return j;
}

}  // namespace

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        const std::string tok = item.substr(b, e - b + 1);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
            throw Error(ErrorCode::config, "bad value '" + tok + "' in list");
        }
        out.push_back(v);
    }
    return out;
}

void configure_logging() {
    static bool done = false;
    if (!done) {
        auto logger = spdlog::stderr_color_mt("gfmsim");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        done = true;
    }
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("GFMSIM_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("GFMSIM_LOG='{}' not recognised, keeping warn", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

int cmd_tune(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = config::load_config(o.config);
        const auto report = tuning::tune_system(cfg.sys, cfg.tuning);
        const auto file = config::gains_file_from(report, cfg.sys);
        if (o.out.empty()) {
            out << config::serialize_gains(file) << "\n";
        } else {
            config::write_file_atomic(o.out, config::serialize_gains(file));
            spdlog::info("wrote {}", o.out);
        }
        out << tuning::format_report(report);
        return int(exit_ok);
    });
}

int cmd_bode(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        static const std::vector<std::string> loops{"gnrg_on", "gnrg_off", "gnrg_wtg", "gudc"};
        if (std::find(loops.begin(), loops.end(), o.loop) == loops.end()) {
            err << "gfmsim: unknown loop '" << o.loop << "' (expected gnrg_on, gnrg_off, gnrg_wtg or gudc)\n";
            return int(exit_usage);
        }
        const auto s = load_setup(o, err);
        const auto reports = tuning::analyse_gains(s.cfg.sys, s.cfg.tuning, s.gains);
        const auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.name == o.loop; });
        if (it == reports.end()) throw Error(ErrorCode::invalid_input, "loop '" + o.loop + "' not analysed");
        const double omega_N = s.cfg.tuning.omega_N;
        const auto points = linsys::bode(it->open_loop, it->omega_L / 100.0, 10.0 * omega_N, 50);
        std::ostringstream os;
        linsys::write_bode_csv(os, points);
        const auto& m = it->margins;
        os << "# loop = " << o.loop << "\n";
        os << "# omega_L_rad_s = " << fmt("%.9g", it->omega_L) << "\n";
        os << "# omega_H_rad_s = " << fmt("%.9g", it->omega_H) << "\n";
        os << "# gain_crossover_rad_s = " << fmt("%.9g", m.gain_crossover_rad_s) << "\n";
        os << "# phase_margin_deg = " << fmt("%.6g", m.phase_margin_deg) << "\n";
        os << "# gain_margin_db = " << (std::isinf(m.gain_margin_db) ? std::string("inf") : fmt("%.6g", m.gain_margin_db))
           << "\n";
        os << "# crossover_placement_error = " << fmt("%.6g", it->crossover_placement_error) << "\n";
        if (m.multiple_crossovers) os << "# warning = several gain crossovers\n";
        emit(o, out, os.str());
        return int(exit_ok);
    });
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto s = load_setup(o, err);
        sim::apply_preset(s.gains, s.cfg.sys, scenario_preset(o, s.cfg));
        const auto& sc = s.cfg.scenario;
        spdlog::info("simulating {} s at dt = {} s", sc.duration, sc.dt);
        const auto log = sim::run(s.cfg.sys, s.gains, sc);

        std::ostringstream csv;
        sim::write_csv(csv, log);
        if (!o.out.empty()) {
            config::write_file_atomic(o.out, csv.str());
            spdlog::info("wrote {}", o.out);
        }

        sim::InvariantContext ctx;
        ctx.K_R_on = s.gains.mmc_on.K_R;
        ctx.K_R_off = s.gains.mmc_off.K_R;
        ctx.event_time = sc.events.empty() ? log.t.front() : sc.first_event_time();
        const auto inv = sim::verify_invariants(log, ctx);

        nlohmann::json j;
        j["scenario"] = o.scenario;
        j["duration_s"] = sc.duration;
        j["dt_s"] = sc.dt;
        j["K_Rw_w_per_hz"] = s.gains.wtg.K_Rw;
        j["K_Hw_ws_per_hz"] = s.gains.wtg.K_Hw;
        if (sc.events.empty()) {
            j["metrics"] = nullptr;
        } else {
            j["metrics"] = metrics_json(sim::compute_metrics(log, sc.first_event_time()));
        }
        j["invariants"]["pass"] = inv.pass;
        for (const auto& c : inv.checks) {
            j["invariants"]["checks"].push_back(
                {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
        }
        const std::string text = j.dump(2) + "\n";
        if (o.metrics.empty()) {
            out << text;
        } else {
            config::write_file_atomic(o.metrics, text);
        }
        for (const auto& c : inv.checks) {
            if (!c.pass) err << "gfmsim: invariant " << c.name << " failed: " << c.value << " > " << c.tolerance << "\n";
        }
        return inv.pass ? int(exit_ok) : int(exit_verification);
    });
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = config::load_config(o.config);
        acceptance::SuiteOptions so;
        so.sys = cfg.sys;
        so.inputs = cfg.tuning;
        if (!o.gains.empty()) so.gains = config::load_gains(o.gains).gains;
        if (o.dt) so.dt = *o.dt;
        so.jobs = std::max(1, o.jobs);
        const auto report = acceptance::run_suite(so);
        std::ostringstream os;
        for (const auto& c : report.criteria) os << acceptance::format_line(c) << "\n";
        os << (report.pass() ? "ALL PASS" : "FAILED") << "\n";
        out << os.str();
        if (!o.out.empty()) config::write_file_atomic(o.out, os.str());
        return report.pass() ? int(exit_ok) : int(exit_verification);
    });
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (o.values.empty()) {
            err << "gfmsim: sweep needs at least one value\n";
            return int(exit_usage);
        }
        auto base = load_setup(o, err);
        const auto preset = scenario_preset(o, base.cfg);
        // bare K_Rw and friends refer to the WTG controller
        std::string key = o.param;
        if (key.find('.') == std::string::npos && !config::tuning_field(base.cfg.tuning, key) && key != "h_ac") {
            key = "wtg." + key;
        }
        const bool retune = key == "h_ac" || config::tuning_field(base.cfg.tuning, key) != nullptr;
        if (!retune && !config::gain_field(base.gains, key)) {
            err << "gfmsim: '" << o.param << "' is not a sweepable gain or tuning input\n";
            return int(exit_usage);
        }
        if (retune && !o.gains.empty()) {
            err << "gfmsim: sweeping a tuning input retunes the gains; drop --gains\n";
            return int(exit_usage);
        }

        std::vector<sim::BatchTask> tasks;
        std::vector<std::string> setup_errors(o.values.size());
        for (std::size_t k = 0; k < o.values.size(); ++k) {
            const double v = o.values[k];
            sim::BatchTask t{base.cfg.sys, base.gains, base.cfg.scenario};
            try {
                if (retune) {
                    auto in = base.cfg.tuning;
                    if (key == "h_ac") {
                        in.h_ac_on = v;
                        in.h_ac_off = v;
                    } else {
                        *config::tuning_field(in, key) = v;
                    }
                    t.gains = tuning::tune_system(t.sys, in).gains;
                }
                sim::apply_preset(t.gains, t.sys, preset);
                if (!retune) *config::gain_field(t.gains, key) = v;
            } catch (const Error& e) {
                setup_errors[k] = e.what();
            }
            tasks.push_back(std::move(t));
        }
        spdlog::info("sweeping {} over {} values on {} jobs", key, o.values.size(), o.jobs);
        const auto results = sim::run_batch(tasks, std::max(1, o.jobs));

        const double te = base.cfg.scenario.events.empty() ? NAN : base.cfg.scenario.first_event_time();
        std::ostringstream os;
        os << "value,f_nadir,max_rocof,settling,flag\n";
        bool diverged = false;
        for (std::size_t k = 0; k < results.size(); ++k) {
            const auto& r = results[k];
            os << fmt("%.12g", o.values[k]) << ",";
            std::string flag = "ok";
            if (!setup_errors[k].empty()) {
                flag = "setup_error";
                err << "gfmsim: value " << o.values[k] << ": " << setup_errors[k] << "\n";
            } else if (r.diverged) {
                flag = "diverged";
                diverged = true;
                err << "gfmsim: value " << o.values[k] << ": " << r.error << "\n";
            } else if (!r.log) {
                flag = "error";
                err << "gfmsim: value " << o.values[k] << ": " << r.error << "\n";
            } else if (std::isnan(te)) {
                flag = "no_event";
            }
            if (flag == "ok") {
                const auto m = sim::compute_metrics(*r.log, te);
                os << fmt("%.12g", m.f_nadir) << "," << fmt("%.12g", m.max_rocof) << ","
                   << fmt("%.12g", m.settling_time) << ",ok\n";
            } else {
                os << ",,," << flag << "\n";
            }
        }
        emit(o, out, os.str());
        return diverged ? int(exit_divergence) : int(exit_ok);
    });
}

}  // namespace gfm::cli
