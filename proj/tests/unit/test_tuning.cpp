#include "doctest.h"

#include "gfm/error.hpp"
#include "gfm/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>

using namespace gfm;
using namespace gfm::tuning;
using linsys::Polynomial;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double wN = 2 * pi * 50;

double mag_db(const RationalTransferFunction& tf, double w) { return 20 * std::log10(std::abs(linsys::freq_response(tf, w))); }

// G_Pac of the onshore link at the benchmark dispatch with the tabulated virtual resistance
RationalTransferFunction onshore_gpac() {
    const auto sys = benchmark_system();
    return link_gpac(onshore_link(sys), sys.owpp.P_set, sys.mmc_on.U_N, sys.S_N, sys.f_N, 46.0, 0.021);
}

}  // namespace

TEST_CASE("virtual resistance defaults") {
    const auto vr = default_virtual_resistance(314.159, 1.0);
    CHECK(vr.R_v == doctest::Approx(0.2));
    CHECK(vr.T_v >= 0.0159);
    CHECK(vr.T_v <= 0.0318);
    CHECK(vr.T_v == doctest::Approx(7.5 / 314.159));
    // the tabulated offshore time constant sits inside the same interval
    CHECK(0.017 >= 5.0 / wN);
    CHECK(0.017 <= 10.0 / wN);
    CHECK(default_virtual_resistance(wN, 2.0).R_v == doctest::Approx(2.0 * default_virtual_resistance(wN, 1.0).R_v));
    CHECK_THROWS_AS(default_virtual_resistance(0.0, 1.0), Error);
}

TEST_CASE("energy loop gains") {
    CHECK(tune_energy_loop(5.0, 8.95e8, wN).K_D == doctest::Approx(0.1).epsilon(1e-14));
    const double kd_link = tune_energy_loop(15.0, 8.95e8, wN).K_D;
    CHECK(kd_link == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(std::abs(kd_link - 0.31) / 0.31 < 0.05);
    // inverting the tabulated K_H,on: G(0) = wN^2/(2 pi K_H h^1.5) = 8.95e8 W/rad
    const double kh = tune_energy_loop(5.0, 8.95e8, wN).K_H;
    CHECK(std::abs(kh - 1.57e-6) / 1.57e-6 < 0.01);
    CHECK(kh * 2 * pi * 8.95e8 * std::pow(5.0, 1.5) == doctest::Approx(wN * wN).epsilon(1e-12));
    CHECK_THROWS_AS(tune_energy_loop(1.0, 8.95e8, wN), Error);
    CHECK_THROWS_AS(tune_energy_loop(5.0, 0.0, wN), Error);
}

TEST_CASE("G_nrg shape") {
    const auto gp = onshore_gpac();
    const auto e = tune_energy_loop(5.0, gp.dc_gain(), wN);
    const auto g = build_gnrg(e.K_H, e.K_D, gp);
    const double wL = 2 * pi / e.K_D;
    CHECK(wL == doctest::Approx(62.83).epsilon(1e-3));
    // double integrator below omega_L
    CHECK(mag_db(g, 0.1) - mag_db(g, 1.0) == doctest::Approx(40.0).epsilon(0.01));
    // loop shaped so that |G| = 1 in the middle of omega_L and omega_H
    const double wc = wN / std::sqrt(5.0);
    CHECK(std::abs(linsys::freq_response(g, wc)) == doctest::Approx(1.0).epsilon(0.10));
    // transfer function equals the product evaluated pointwise
    for (double w : {3.0, 80.0, 500.0}) {
        const std::complex<double> s(0.0, w);
        const auto direct = e.K_H * (2 * pi + e.K_D * s) / (s * s) * linsys::freq_response(gp, w);
        CHECK(std::abs(linsys::freq_response(g, w) - direct) < 1e-9 * std::abs(direct));
    }
}

TEST_CASE("energy loop margins over h") {
    const auto gp = onshore_gpac();
    for (double h : {5.0, 7.5, 10.0, 15.0, 20.0}) {
        const auto e = tune_energy_loop(h, gp.dc_gain(), wN);
        const auto r = analyse_loop("gnrg", build_gnrg(e.K_H, e.K_D, gp), 2 * pi / e.K_D, wN);
        CAPTURE(h);
        CHECK(std::abs(r.crossover_placement_error) < 0.15);
        CHECK(r.margins.phase_margin_deg >= 25.0);
        if (h == 5.0) CHECK(r.margins.phase_margin_deg <= 40.0);
    }
}

TEST_CASE("response targets") {
    const auto gp = onshore_gpac();
    const auto e = tune_energy_loop(5.0, gp.dc_gain(), wN);
    const auto g = build_gnrg(e.K_H, e.K_D, gp);
    const auto t = response_targets(g, gp, 0.6, 1e-4);
    CHECK(t.y_dc_ac.y.back() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(t.dc_ac_metrics.final_value == 1.0);
    // frequency offset of 1 rad/s settles at dW = 1/(2 pi K_H)
    CHECK(t.ac_ac_metrics.final_value == doctest::Approx(1.0 / (2 * pi * e.K_H)).epsilon(1e-9));
    CHECK(t.y_ac_ac.y.back() == doctest::Approx(1.0 / (2 * pi * e.K_H)).epsilon(1e-3));
    // final slope of the ramp response vanishes
    const auto n = t.y_ac_ac.size();
    const double slope = (t.y_ac_ac.y[n - 1] - t.y_ac_ac.y[n - 11]) / (t.y_ac_ac.t[n - 1] - t.y_ac_ac.t[n - 11]);
    CHECK(std::abs(slope) < 1e-3 * t.ac_ac_metrics.final_value);

    // overshoot of y_dc_ac shrinks as h grows
    double prev = 1e9;
    for (double h : {5.0, 10.0, 20.0}) {
        const auto eh = tune_energy_loop(h, gp.dc_gain(), wN);
        const auto th = response_targets(build_gnrg(eh.K_H, eh.K_D, gp), gp, 1.0, 1e-4);
        CAPTURE(h);
        CHECK(th.dc_ac_metrics.overshoot_pct < prev);
        prev = th.dc_ac_metrics.overshoot_pct;
    }

    const auto bad = build_gnrg(e.K_H, e.K_D, linsys::scale(gp, -1.0));
    CHECK_THROWS_AS(response_targets(bad, gp, 0.5, 1e-4), Error);
    try {
        response_targets(bad, gp, 0.5, 1e-4);
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::instability);
    }
}

TEST_CASE("DC current loop") {
    const auto t = tune_dc_current(0.13, 2.048, 1000.0, 10000.0);
    CHECK(t.gains.K_p == doctest::Approx(130.0).epsilon(1e-14));
    CHECK(t.gains.K_i == doctest::Approx(2048.0).epsilon(1e-14));
    CHECK_FALSE(t.above_sampling_limit);
    CHECK(tune_dc_current(0.13, 2.048, 2000.0, 10000.0).above_sampling_limit);
    // PI zero on the plant pole
    CHECK(t.gains.K_i / t.gains.K_p == doctest::Approx(2.048 / 0.13));

    const auto cl = dc_current_closed_loop(0.13, 2.048, t.gains);
    const auto y = linsys::step_response(cl, 0.01, 1e-6);
    double worst = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) worst = std::max(worst, std::abs(y.y[k] - (1.0 - std::exp(-1000.0 * y.t[k]))));
    CHECK(worst < 0.02);
    CHECK(y.at(1e-3) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("compensator") {
    const auto c = design_compensator(4.8e-5, 0.0729, 4.375, 1000.0);
    // written over a constant term of 16 as printed
    const double k = 16.0 / c.num()[0];
    CHECK(k * c.num()[2] == doctest::Approx(3.5e-6).epsilon(0.005));
    CHECK(k * c.num()[1] == doctest::Approx(2.1e-4).epsilon(0.005));
    CHECK(k * c.den()[0] == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(k * c.den()[1] == doctest::Approx(16.0 * 2e-4).epsilon(1e-12));
    CHECK(k * c.den()[2] == doctest::Approx(16.0 * 1e-8).epsilon(1e-12));
    CHECK(c.dc_gain() == doctest::Approx(1.0));
    for (const auto& z : linsys::zeros(c)) CHECK(std::abs(z) == doctest::Approx(2138.0).epsilon(0.01));
    for (const auto& p : linsys::poles(c)) CHECK(p.real() == doctest::Approx(-1e4).epsilon(1e-6));
}

TEST_CASE("DC voltage loop") {
    const auto g = tune_dc_voltage(4.8e-5, 1000.0, 4.0);
    CHECK(g.K_p == doctest::Approx(0.024).epsilon(1e-12));
    CHECK(g.K_i == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(std::abs(g.K_i - 6.1) / 6.1 < 0.02);

    const auto gu = build_gudc(g, 4.8e-5, 1000.0);
    const auto r = analyse_loop("gudc", gu, g.K_i / g.K_p, 1000.0);
    CHECK(r.margins.phase_margin_deg >= 25.0);
    CHECK(r.margins.phase_margin_deg <= 40.0);
    CHECK(std::abs(r.crossover_placement_error) < 0.15);
    CHECK(r.margins.gain_crossover_rad_s > g.K_i / g.K_p);
    CHECK(r.margins.gain_crossover_rad_s < 1000.0);
    // phase at omega_c from the factor angles: -180 + atan(wc/wL) - atan(wc/wH) - 2 atan(0.1 wc/wH)
    const double wc = r.margins.gain_crossover_rad_s;
    const double pm = std::atan(wc / 250.0) - std::atan(wc / 1000.0) - 2 * std::atan(0.1 * wc / 1000.0);
    CHECK(r.margins.phase_margin_deg == doctest::Approx(pm * 180 / pi).epsilon(1e-6));

    const auto assembled = assemble_gudc(g, 4.8e-5, 0.0729, 4.375, 1000.0);
    CHECK(assembled.order() == 7);  // uncancelled: PI 1, compensator 2, current 1, line 3
    CHECK(tf_mismatch(gu, assembled) < 1e-6);
    CHECK(tf_mismatch(gu, linsys::scale(gu, 1.01)) > 1e-3);
}

TEST_CASE("droop and bandwidth bounds") {
    CHECK(tune_droop(19.2e3, 0.5) == doctest::Approx(3.84e4));
    CHECK(tune_droop(19.2e3, 1.0) == doctest::Approx(0.5 * tune_droop(19.2e3, 0.5)));
    // equal droops: onshore and offshore steady deviations coincide
    const double dU = 1.2e3;
    CHECK((dU / tune_droop(19.2e3, 0.5)) / (dU / tune_droop(19.2e3, 0.5)) == 1.0);

    const auto b = bandwidth_bounds(314.159, 10000.0, 5.0, 4.0);
    CHECK(b.ac == doctest::Approx(140.5).epsilon(1e-3));
    CHECK(b.dc == doctest::Approx(500.0));
    double prev_ac = 1e9, prev_dc = 1e9;
    for (double h : {2.0, 4.0, 5.0, 10.0, 20.0}) {
        const auto bh = bandwidth_bounds(wN, 10000.0, h, h);
        CHECK(bh.ac < prev_ac);
        CHECK(bh.dc < prev_dc);
        prev_ac = bh.ac;
        prev_dc = bh.dc;
    }
}

TEST_CASE("benchmark pipeline reproduces the tabulated gains") {
    const auto sys = benchmark_system();
    const auto start = std::chrono::steady_clock::now();
    const auto r = tune_system(sys, TuningInputs{});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 1.0);

    const auto& on = r.gains.mmc_on;
    const auto& off = r.gains.mmc_off;
    CHECK(std::abs(on.K_H - 1.57e-6) / 1.57e-6 < 0.05);
    CHECK(std::abs(off.K_H - 1.89e-6) / 1.89e-6 < 0.05);
    CHECK(on.K_D == doctest::Approx(0.1));
    CHECK(off.K_D == doctest::Approx(0.1));
    CHECK(on.K_R == doctest::Approx(3.84e4));
    CHECK(off.K_R == doctest::Approx(3.84e4));
    CHECK(std::abs(on.R_v - 46.0) / 46.0 < 0.01);
    CHECK(std::abs(off.R_v - 52.0) / 52.0 < 0.01);
    CHECK(r.gains.wtg.R_vw == doctest::Approx(2.4));
    CHECK(on.K_pIdc == doctest::Approx(130.0));
    CHECK(on.K_iIdc == doctest::Approx(2048.0));
    CHECK(std::abs(r.gains.wtg.K_Dlink - 0.31) / 0.31 < 0.05);
    CHECK_NOTHROW(on.validate());
    CHECK_NOTHROW(r.gains.wtg.validate());

    // G_Pac(0) against the lossless closed form 1.5 U E cos(delta)/X at the solved angle
    const auto link = onshore_link(sys);
    const double X = link.omega1 * link.L;
    const double lossless = 1.5 * link.U * link.E * std::cos(r.delta_on) / X;
    CHECK(r.gpac_dc_gain_on == doctest::Approx(lossless).epsilon(0.03));

    CHECK(r.loop("gnrg_on").margins.phase_margin_deg >= 25.0);
    CHECK(r.loop("gnrg_on").margins.phase_margin_deg <= 40.0);
    CHECK(std::abs(r.loop("gnrg_on").crossover_placement_error) < 0.15);
    CHECK(r.loop("gudc").margins.phase_margin_deg >= 25.0);
    CHECK(r.gudc_assembly_mismatch < 1e-6);
    CHECK(r.bounds.dc == doctest::Approx(500.0));

    // the same gains analysed from scratch give the same loops
    const auto again = analyse_gains(sys, TuningInputs{}, r.gains);
    for (std::size_t k = 0; k < again.size(); ++k) {
        CHECK(again[k].margins.phase_margin_deg == doctest::Approx(r.loops[k].margins.phase_margin_deg));
    }
    CHECK(format_report(r).find("gnrg_on") != std::string::npos);
}

TEST_CASE("pipeline warnings") {
    const auto sys = benchmark_system();
    TuningInputs in;
    in.h_ac_on = 3.0;
    const auto r = tune_system(sys, in);
    const bool warned = std::any_of(r.warnings.begin(), r.warnings.end(),
                                    [](const std::string& w) { return w.find("h_ac below 5") != std::string::npos; });
    CHECK(warned);

    TuningInputs fast;
    fast.omega_idc = 2000.0;
    const auto rf = tune_system(sys, fast);
    CHECK(std::any_of(rf.warnings.begin(), rf.warnings.end(),
                      [](const std::string& w) { return w.find("omega_s/10") != std::string::npos; }));

    auto infeasible = sys;
    infeasible.owpp.P_set = 5e9;
    CHECK_THROWS_AS(tune_system(infeasible, TuningInputs{}), Error);
    TuningInputs badh;
    badh.h_dc = 1.0;
    CHECK_THROWS_AS(tune_system(sys, badh), Error);
}
