#include "doctest.h"

#include "gfm/error.hpp"
#include "gfm/sim.hpp"
#include "gfm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace gfm;
using namespace gfm::sim;

namespace {

struct Bench {
    SystemParams sys = benchmark_system();
    ControllerGains gains = tuning::tune_system(sys, {}).gains;
};

const Bench& bench() {
    static const Bench b;
    return b;
}

ControllerGains preset_gains(FrequencyPreset p) {
    auto g = bench().gains;
    apply_preset(g, bench().sys, p);
    return g;
}

Scenario short_scenario(double duration = 16.0) {
    auto s = benchmark_scenario(bench().sys);
    s.duration = duration;
    return s;
}

double max_abs_dev(const std::vector<double>& y, double ref) {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v - ref));
    return m;
}

SystemParams lossless_system() {
    auto s = benchmark_system();
    s.onshore.R_th = 0.0;
    s.mmc_on.converter.R_s = 0.0;
    s.mmc_on.converter.R_d = 0.0;
    s.mmc_off.converter.R_s = 0.0;
    s.mmc_off.converter.R_d = 0.0;
    s.line.R_dc = 0.0;
    s.owpp.cable_R_per_km = 0.0;
    s.owpp.wtg.R_GSC = 0.0;
    return s;
}

}  // namespace

TEST_CASE("scenario validation") {
    auto s = benchmark_scenario(bench().sys);
    CHECK_NOTHROW(s.validate());
    CHECK(s.first_event_time() == 6.0);
    CHECK(s.events.front().value == doctest::Approx(90e6));

    auto early = s;
    early.events.front().t = 4.0;
    CHECK_THROWS_AS(early.validate(), Error);
    auto unsorted = s;
    unsorted.events.push_back({5.5, EventKind::onshore_load_step, 1e6, ""});
    CHECK_THROWS_AS(unsorted.validate(), Error);
    auto bad_target = s;
    bad_target.events.push_back({7.0, EventKind::setpoint_change, 1.0, "nonsense"});
    CHECK_THROWS_AS(bad_target.validate(), Error);
    auto no_dt = s;
    no_dt.dt = 0.0;
    CHECK_THROWS_AS(no_dt.validate(), Error);
    Scenario empty = s;
    empty.events.clear();
    CHECK_THROWS_AS(empty.first_event_time(), Error);
}

TEST_CASE("frequency presets") {
    const auto& sys = bench().sys;
    auto fcr = preset_gains(FrequencyPreset::fcr);
    CHECK(fcr.wtg.K_Rw == doctest::Approx(1.2e8));
    CHECK(fcr.wtg.K_Hw == 0.0);
    auto in = preset_gains(FrequencyPreset::inertia);
    CHECK(in.wtg.K_Rw == 0.0);
    CHECK(in.wtg.K_Hw + 1.0 / in.wtg.K_Hlink == doctest::Approx(4.0 * sys.S_N / sys.f_N));
    CHECK(in.wtg.K_Hw > 0.0);
    CHECK(parse_preset("none") == FrequencyPreset::none);
    CHECK_THROWS_AS(parse_preset("droop"), Error);
}

TEST_CASE("initialization") {
    const auto& b = bench();
    Simulation s(b.sys, b.gains);
    s.presolve(default_dispatch(b.sys));
    CHECK(s.residual() < 1e-9);

    SUBCASE("settle converges and a second settle changes nothing") {
        s.initialize(default_dispatch(b.sys), 2.0, 50e-6);
        CHECK(s.residual() < 1e-6);
        const PlantState x0 = s.state();
        s.run_until(s.time() + 2.0, {}, 1000);
        const auto& x1 = s.state();
        auto rel = [](double a, double c, double nom) { return std::abs(a - c) / nom; };
        CHECK(rel(x1.machine.omega_pu, x0.machine.omega_pu, 1.0) < 1e-9);
        CHECK(rel(x1.mmc_on.W_t, x0.mmc_on.W_t, 9e6) < 1e-9);
        CHECK(rel(x1.mmc_off.W_t, x0.mmc_off.W_t, 9e6) < 1e-9);
        CHECK(rel(x1.wtg.W_link, x0.wtg.W_link, b.gains.wtg.W_link_star) < 1e-9);
        CHECK(rel(x1.line.U_mid, x0.line.U_mid, 640e3) < 1e-9);
        CHECK(rel(x1.mmc_on.i_s.d, x0.mmc_on.i_s.d, 1e3) < 1e-9);
        CHECK(rel(x1.wtg.i_w.q, x0.wtg.i_w.q, 1e3) < 1e-9);
    }

    SUBCASE("repeated initialize reproduces the state") {
        s.initialize(default_dispatch(b.sys), 0.5, 50e-6);
        const PlantState x0 = s.state();
        s.initialize(default_dispatch(b.sys), 0.5, 50e-6);
        CHECK(s.state().line.U_dc_on == x0.line.U_dc_on);
        CHECK(s.state().mmc_on.i_s.q == x0.mmc_on.i_s.q);
        CHECK(s.time() == doctest::Approx(0.5));
    }

    SUBCASE("zero dispatch") {
        s.initialize({0.0, b.sys.onshore.P_load}, 0.5, 50e-6);
        CHECK(s.residual() < 1e-6);
        CHECK(std::abs(s.state().wtg.P_MSC) < 1e-6);
        CHECK(std::abs(s.state().mmc_on.I_dc) < 1e-6);
    }
}

TEST_CASE("loss accounting at the dispatch point") {
    // P_set = 0.8 p.u.: the onshore AC power is P_MSC less every I^2 R on the way
    const auto& b = bench();
    Simulation s(b.sys, b.gains);
    s.initialize(default_dispatch(b.sys), 0.5, 50e-6);
    const auto& x = s.state();
    const auto wtg = offshore_wtg_params(b.sys);
    const double i_w2 = x.wtg.i_w.d * x.wtg.i_w.d + x.wtg.i_w.q * x.wtg.i_w.q;
    const double losses = 1.5 * i_w2 * wtg.R_w() +
                          b.sys.mmc_off.converter.R_d * x.mmc_off.I_dc * x.mmc_off.I_dc +
                          0.5 * b.sys.line.R_dc * (x.line.i_sec1 * x.line.i_sec1 + x.line.i_sec2 * x.line.i_sec2) +
                          b.sys.mmc_on.converter.R_d * x.mmc_on.I_dc * x.mmc_on.I_dc;
    CHECK(b.sys.owpp.P_set == doctest::Approx(0.8 * b.sys.S_N));
    const auto row = s.step();
    CHECK(row[P_msc] == doctest::Approx(b.sys.owpp.P_set).epsilon(1e-9));
    CHECK(row[P_ac_on] == doctest::Approx(row[P_msc] - losses).epsilon(1e-7));
    CHECK(losses > 0.0);
    CHECK(losses < 0.05 * row[P_msc]);
}

TEST_CASE("equilibrium hold without events") {
    const auto& b = bench();
    auto sc = short_scenario(8.0);
    sc.events.clear();
    const auto log = run(b.sys, b.gains, sc);
    REQUIRE(log.size() > 0);
    CHECK(log.t.front() == doctest::Approx(5.0));
    CHECK(log.decimation == 2);
    for (Channel c : {f_on, f_off, f_wtg}) CHECK(max_abs_dev(log[c], 50.0) < 0.05);
    CHECK(max_abs_dev(log[f_on], 50.0) < 1e-6);
    CHECK(max_abs_dev(log[U_mid], 640e3) < 640.0);
    CHECK(max_abs_dev(log[P_gsc], b.sys.owpp.P_set) < 1e-3 * b.sys.owpp.P_set);
    CHECK(max_abs_dev(log[W_t_on], log[W_t_on].front()) < 1e-3 * 9e6);
}

TEST_CASE("swing equation at the event") {
    const auto& b = bench();
    Simulation s(b.sys, b.gains);
    s.initialize(default_dispatch(b.sys), 0.5, 50e-6);
    const double dP = 90e6;
    const auto& m = b.sys.onshore.machine;
    const double expected = -dP * b.sys.f_N / (2.0 * m.H * m.S_base);
    const double f0 = s.grid_frequency();
    s.apply({0.5, EventKind::onshore_load_step, dP, ""});
    CHECK(s.load() == doctest::Approx(b.sys.onshore.P_load + dP));
    for (int k = 0; k < 20; ++k) s.step();
    const double rocof = (s.grid_frequency() - f0) / (20 * 50e-6);
    CHECK(rocof == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("events apply at the first step at or after their time") {
    const auto& b = bench();
    Simulation s(b.sys, b.gains);
    s.initialize(default_dispatch(b.sys), 0.1, 50e-6);
    const double P0 = s.load();
    s.run_until(0.2, {{0.10012, EventKind::onshore_load_step, 1e6, ""}}, 1);
    CHECK(s.load() == doctest::Approx(P0 + 1e6));
    Simulation s2(b.sys, b.gains);
    s2.initialize(default_dispatch(b.sys), 0.1, 50e-6);
    s2.run_until(0.10015, {{0.10016, EventKind::onshore_load_step, 1e6, ""}}, 1);
    CHECK(s2.load() == P0);
    s2.apply({0.0, EventKind::setpoint_change, 0.9 * b.sys.owpp.P_set, "P_set"});
    CHECK(s2.gains().wtg.P_set == doctest::Approx(0.9 * b.sys.owpp.P_set));
}

TEST_CASE("benchmark load step") {
    const auto& b = bench();
    const auto sc = benchmark_scenario(b.sys);
    const auto log = run(b.sys, b.gains, sc);
    const double te = sc.first_event_time();

    SUBCASE("determinism") {
        const auto again = run(b.sys, b.gains, sc);
        REQUIRE(again.size() == log.size());
        bool same = true;
        for (std::size_t c = 0; c < channel_count; ++c) same = same && again.data[c] == log.data[c];
        CHECK(same);
    }

    SUBCASE("under-frequency on every controller") {
        const auto first = std::lower_bound(log.t.begin(), log.t.end(), te + 0.01) - log.t.begin();
        for (Channel c : {f_on, f_off, f_wtg}) {
            double worst = -1.0;
            for (auto k = static_cast<std::size_t>(first); k < log.size(); ++k) worst = std::max(worst, log[c][k] - 50.0);
            CHECK(worst < 0.0);
        }
        const auto m = compute_metrics(log, te);
        CHECK(m.f_nadir <= m.f_initial);
        CHECK(m.steady_delta_f_on < 0.0);
        CHECK(m.steady_delta_f_off < 0.0);
        CHECK(m.steady_delta_f_wtg < 0.0);
        CHECK(m.max_rocof < 0.0);
    }

    SUBCASE("invariants") {
        const auto rep = verify_invariants(log, {b.gains.mmc_on.K_R, b.gains.mmc_off.K_R, te});
        for (const auto& c : rep.checks) {
            INFO(c.name << " = " << c.value);
            CHECK(c.pass);
        }
        CHECK(rep.pass);
    }

    SUBCASE("an injected 1% power leak fails the energy check") {
        auto leaky = log;
        for (auto& p : leaky[P_dc_on]) p *= 1.01;
        const auto rep = verify_invariants(leaky, {b.gains.mmc_on.K_R, b.gains.mmc_off.K_R, te});
        CHECK_FALSE(rep.pass);
        CHECK_FALSE(rep.checks.front().pass);
        CHECK(energy_error(leaky, W_t_on, P_dc_on, P_ac_on, log.t.front()) > 0.1);
    }

    SUBCASE("CSV round trip") {
        std::stringstream ss;
        write_csv(ss, log);
        std::string header;
        std::getline(ss, header);
        CHECK(header ==
              "t,f_on,f_off,f_wtg,P_ac_on,P_dc_on,P_ac_off,P_dc_off,P_gsc,P_msc,W_t_on,W_t_off,W_link,U_dc_on,U_mid,"
              "U_dc_off,I_dc_on,I_dc_off");
        ss.seekg(0);
        const auto back = read_csv(ss);
        REQUIRE(back.size() == log.size());
        CHECK(back.decimation == 2);
        for (std::size_t k = 0; k < log.size(); k += 997) {
            CHECK(back.t[k] == doctest::Approx(log.t[k]).epsilon(1e-12));
            CHECK(back[W_link][k] == doctest::Approx(log[W_link][k]).epsilon(1e-11));
            CHECK(back[I_dc_off][k] == doctest::Approx(log[I_dc_off][k]).epsilon(1e-11));
        }
        std::stringstream bad("t,f_on\n0,50\n");
        CHECK_THROWS_AS(read_csv(bad), Error);
    }
}

TEST_CASE("step halving") {
    const auto& b = bench();
    auto sc = short_scenario();
    const auto m1 = compute_metrics(run(b.sys, b.gains, sc), 6.0);
    sc.dt = 25e-6;
    const auto m2 = compute_metrics(run(b.sys, b.gains, sc), 6.0);
    CHECK(std::abs(m1.f_nadir - m2.f_nadir) < 1e-3 * m2.f_nadir);
    // far tighter than required: relative to the depth of the dip
    CHECK(std::abs(m1.f_nadir - m2.f_nadir) < 1e-3 * (50.0 - m2.f_nadir));
}

TEST_CASE("FCR preset") {
    const auto& b = bench();
    const auto g = preset_gains(FrequencyPreset::fcr);
    const auto log = run(b.sys, g, short_scenario());
    const auto m = compute_metrics(log, 6.0);
    const double rise = m.steady_power_chain[4] - b.sys.owpp.P_set;
    CHECK(rise == doctest::Approx(g.wtg.K_Rw * std::abs(m.steady_delta_f_on)).epsilon(0.03));
    const auto rep = verify_invariants(log, {g.mmc_on.K_R, g.mmc_off.K_R, 6.0});
    CHECK(rep.pass);
    // droop closure on the two MMCs
    CHECK(g.mmc_on.K_R * m.steady_delta_f_on ==
          doctest::Approx(g.mmc_off.K_R * m.steady_delta_f_off).epsilon(0.01));
}

TEST_CASE("nadir is monotone in the OWPP droop gain") {
    const auto& b = bench();
    std::vector<BatchTask> tasks;
    for (double k : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto g = preset_gains(FrequencyPreset::fcr);
        g.wtg.K_Rw *= k;
        tasks.push_back({b.sys, g, short_scenario(12.0)});
    }
    const auto res = run_batch(tasks, 2);
    std::vector<double> nadirs;
    for (const auto& r : res) {
        REQUIRE(r.log);
        nadirs.push_back(compute_metrics(*r.log, 6.0).f_nadir);
    }
    for (std::size_t k = 1; k < nadirs.size(); ++k) CHECK(nadirs[k] >= nadirs[k - 1]);
    CHECK(nadirs.back() > nadirs.front());
}

TEST_CASE("lossless chain") {
    const auto sys = lossless_system();
    auto g = tuning::tune_system(sys, {}).gains;
    apply_preset(g, sys, FrequencyPreset::fcr);
    const auto m = compute_metrics(run(sys, g, short_scenario(12.0)), 6.0);
    const double p_end = m.steady_power_chain.back();
    for (double p : m.steady_power_chain) CHECK(p == doctest::Approx(p_end).epsilon(1e-3));
}

TEST_CASE("divergence is reported with a time stamp") {
    const auto& b = bench();
    auto g = b.gains;
    g.mmc_on.K_iIdc *= -1.0;
    auto sc = short_scenario(6.5);
    sc.settle_time = 0.0;
    sc.events.clear();
    try {
        run(b.sys, g, sc);
        FAIL("no divergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::divergence);
        CHECK(std::string(e.what()).find("t = ") != std::string::npos);
    }
}

TEST_CASE("batch runner keeps order and flags failures") {
    const auto& b = bench();
    auto bad = b.gains;
    bad.mmc_on.K_iIdc *= -1.0;
    auto quick = short_scenario(8.0);
    quick.settle_time = 1.0;
    quick.events = {{2.0, EventKind::onshore_load_step, 9e7, ""}};
    auto bad_sc = quick;
    bad_sc.settle_time = 0.0;
    const auto res = run_batch({{b.sys, b.gains, quick}, {b.sys, bad, bad_sc}, {b.sys, b.gains, quick}}, 3);
    REQUIRE(res.size() == 3);
    REQUIRE(res[0].log);
    REQUIRE(res[2].log);
    CHECK(res[0].log->data[f_on] == res[2].log->data[f_on]);
    CHECK_FALSE(res[1].log);
    CHECK(res[1].diverged);
    CHECK_FALSE(res[1].error.empty());
    CHECK(run_batch({}, 4).empty());
}

TEST_CASE("metrics on synthetic traces") {
    linsys::TimeSeries exp_f;
    for (int k = 0; k <= 20000; ++k) {
        const double t = k * 1e-3;
        exp_f.t.push_back(t);
        exp_f.y.push_back(50.0 - 0.5 * (1.0 - std::exp(-t / 2.0)));
    }
    const auto m = frequency_metrics(exp_f, 0.0);
    CHECK(m.f_initial == 50.0);
    CHECK(m.f_nadir == doctest::Approx(49.5).epsilon(1e-4));
    // 0.5 e^{-t/2} = 0.05 * 0.5 at t = 2 ln 20
    CHECK(m.settling_time == doctest::Approx(2.0 * std::log(20.0)).epsilon(0.01));
    CHECK(m.max_rocof == doctest::Approx(-(1.0 - std::exp(-0.25))).epsilon(1e-6));

    linsys::TimeSeries ramp;
    for (int k = 0; k <= 15000; ++k) {
        const double t = k * 1e-3;
        ramp.t.push_back(t);
        ramp.y.push_back(t < 2.0 ? 50.0 : 50.0 - 0.1 * (t - 2.0));
    }
    for (double w : {0.1, 0.5, 2.0}) CHECK(std::abs(frequency_metrics(ramp, 2.0, w).max_rocof) == doctest::Approx(0.1));

    CHECK_THROWS_AS(frequency_metrics(ramp, 20.0), Error);
    CHECK_THROWS_AS(frequency_metrics(ramp, -1.0), Error);
    CHECK_THROWS_AS(frequency_metrics(ramp, 14.5), Error);
}

TEST_CASE("Thevenin angle step against G_Pac") {
    const auto& b = bench();
    const auto r = thevenin_angle_step(b.sys, b.gains, 0.01, 0.1, 5e-6);
    CHECK(r.peak_linear < 0.0);
    CHECK(r.peak_nonlinear == doctest::Approx(r.peak_linear).epsilon(0.05));
    CHECK(r.nonlinear.y.front() == 0.0);
    // doubling the step doubles the response to first order
    const auto r2 = thevenin_angle_step(b.sys, b.gains, 0.02, 0.1, 5e-6);
    CHECK(r2.peak_nonlinear == doctest::Approx(2.0 * r.peak_nonlinear).epsilon(0.02));
}
