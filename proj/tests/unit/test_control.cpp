#include "doctest.h"

#include "gfm/control.hpp"
#include "gfm/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

using namespace gfm::control;
using gfm::linsys::Polynomial;
using gfm::linsys::RationalTransferFunction;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double dt = 50e-6;

MmcControllerGains mmc_gains() {
    MmcControllerGains g;
    g.K_H = 1.57e-6;
    g.K_D = 0.1;
    g.K_R = 3.84e4;
    g.R_v = 46.0;
    g.T_v = 0.021;
    g.K_pUdc = 0.024;
    g.K_iUdc = 6.0;
    g.K_pIdc = 130.0;
    g.K_iIdc = 2048.0;
    g.cmp_num = Polynomial{16.0, 2.1e-4, 3.5e-6};
    g.cmp_den = 16.0 * (Polynomial{1.0, 1e-4} * Polynomial{1.0, 1e-4});
    g.f_star = 50.0;
    g.U_mid_star = 640e3;
    g.W_t_star = 9e6;
    g.R_dc = 4.375;
    return g;
}

WtgControllerGains wtg_gains() {
    WtgControllerGains g;
    g.K_Hlink = 3.6e-7;
    g.K_Dlink = 0.3;
    g.R_vw = 2.4;
    g.T_vw = 0.015;
    g.K_Hw = 0.0;
    g.K_Rw = 4e8;
    g.P_set = 240e6;
    g.U_link_nom = 132e3;
    g.W_link_star = 0.5 * 5.17e-3 * 132e3 * 132e3;
    return g;
}

// least-squares fit of y(t) = c0 + a sin(wt) + b cos(wt); returns a + jb, the gain relative to a sine input
std::complex<double> fit_phasor(const std::vector<double>& t, const std::vector<double>& y, double w) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(t.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        A(r, 0) = 1.0;
        A(r, 1) = std::sin(w * t[k]);
        A(r, 2) = std::cos(w * t[k]);
        b(r) = y[k];
    }
    const Eigen::Vector3d x = A.colPivHouseholderQr().solve(b);
    // a sin + b cos = Im{(a + j b) e^{jwt}}
    return {x(1), x(2)};
}

}  // namespace

TEST_CASE("MMC controller at equilibrium") {
    auto g = mmc_gains();
    MmcControllerState s;
    MmcMeasurements m{g.W_t_star, {0.0, 0.0}, 640e3, 0.0, 200e3};
    double theta_prev = 0.0;
    for (int k = 0; k < 100; ++k) {
        auto a = mmc_control_step(g, s, m, dt);
        CHECK(s.delta_f == 0.0);
        CHECK(a.theta_unwrapped - theta_prev == doctest::Approx(2 * pi * g.f_star * dt).epsilon(1e-9));
        CHECK(a.u_sum0_cmd == doctest::Approx(320e3));
        CHECK(a.u_diff_cmd.d == doctest::Approx(200e3));
        CHECK(a.theta > -pi);
        CHECK(a.theta <= pi);
        theta_prev = a.theta_unwrapped;
    }
}

TEST_CASE("energy path integrates the energy deviation") {
    auto g = mmc_gains();
    g.K_D = 0.0;
    MmcControllerState s;
    const double w = 2e5, T = 0.5;
    MmcMeasurements m{g.W_t_star + w, {}, 640e3, 0.0, 200e3};
    const int n = static_cast<int>(std::round(T / dt));
    MmcActuation a{};
    for (int k = 0; k < n; ++k) a = mmc_control_step(g, s, m, dt);
    const double dtheta = a.theta_unwrapped - 2 * pi * g.f_star * n * dt;
    CHECK(dtheta == doctest::Approx(2 * pi * g.K_H * w * T).epsilon(1e-9));
}

TEST_CASE("discrete energy path matches K_H (2 pi + K_D s)/s") {
    auto g = mmc_gains();
    for (double w : {1.0, 10.0, 31.4}) {
        MmcControllerState s;
        const double A = 1e5;
        const double period = 2 * pi / w;
        const int n = static_cast<int>(std::round(4 * period / dt));
        std::vector<double> tt, yy;
        tt.reserve(n);
        yy.reserve(n);
        for (int k = 1; k <= n; ++k) {
            const double t = k * dt;
            MmcMeasurements m{g.W_t_star + A * std::sin(w * t), {}, 640e3, 0.0, 200e3};
            auto a = mmc_control_step(g, s, m, dt);
            tt.push_back(t);
            yy.push_back(a.theta_unwrapped - 2 * pi * g.f_star * t);
        }
        const auto measured = fit_phasor(tt, yy, w) / A;
        const auto ideal = g.K_H * (2 * pi + g.K_D * std::complex<double>(0.0, w)) / std::complex<double>(0.0, w);
        CHECK(std::abs(measured) == doctest::Approx(std::abs(ideal)).epsilon(0.01));
        CHECK(std::abs(std::arg(measured / ideal)) * 180 / pi < 1.0);
    }
}

TEST_CASE("virtual resistance is a high-pass") {
    auto g = mmc_gains();
    MmcControllerState s;
    const double I = 500.0;
    MmcMeasurements m{g.W_t_star, {I, -200.0}, 640e3, 0.0, 200e3};
    auto a0 = mmc_control_step(g, s, m, dt);
    // first step: almost the full resistance acts
    CHECK(200e3 - a0.u_diff_cmd.d == doctest::Approx(g.R_v * I / (1 + dt / g.T_v)).epsilon(1e-9));
    MmcActuation a{};
    const int n10 = static_cast<int>(std::round(10 * g.T_v / dt));
    for (int k = 1; k < n10; ++k) a = mmc_control_step(g, s, m, dt);
    // backward Euler decay after ten time constants: (1 + dt/T)^-n, about e^-10
    const double decay = std::pow(1.0 + dt / g.T_v, -n10);
    CHECK(std::abs(200e3 - a.u_diff_cmd.d) == doctest::Approx(g.R_v * I * decay).epsilon(1e-6));
    for (int k = 0; k < 5 * n10; ++k) a = mmc_control_step(g, s, m, dt);
    CHECK(std::abs(200e3 - a.u_diff_cmd.d) < 1e-9 * g.R_v * I);

    // preloaded filter: no contribution at all under constant current
    MmcControllerState e;
    mmc_controller_equilibrium(g, e, m, 0.0, 320e3);
    auto b = mmc_control_step(g, e, m, dt);
    CHECK(std::abs(200e3 - b.u_diff_cmd.d) < 1e-9);
    CHECK(std::abs(b.u_diff_cmd.q) < 1e-9);
}

TEST_CASE("equilibrium preload holds every loop") {
    auto g = mmc_gains();
    const double I_into = 375.0, U_dc = 640e3 - 0.5 * g.R_dc * I_into, R_d = 2.048;
    MmcControllerState s;
    MmcMeasurements m{g.W_t_star, {700.0, 20.0}, U_dc, I_into, 210e3};
    const double u_sum0 = 0.5 * (U_dc - R_d * I_into);
    mmc_controller_equilibrium(g, s, m, 0.3, u_sum0);
    auto a = mmc_control_step(g, s, m, dt);
    CHECK(a.u_sum0_cmd == doctest::Approx(u_sum0).epsilon(1e-12));
    CHECK(s.e_dc == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(a.theta_unwrapped == doctest::Approx(0.3 + 2 * pi * g.f_star * dt));
}

TEST_CASE("compensator realization") {
    auto g = mmc_gains();
    CHECK_NOTHROW(g.validate());
    DiscreteTf f(g.cmp());
    CHECK(f.order() == 2);
    std::vector<double> x;
    double y = 0.0;
    for (int k = 0; k < 4000; ++k) y = f.step(x, 1.0, dt);
    CHECK(y == doctest::Approx(1.0).epsilon(1e-9));
    auto ss = f.steady_state(2.5);
    std::vector<double> x2 = ss;
    CHECK(f.step(x2, 2.5, dt) == doctest::Approx(2.5).epsilon(1e-12));

    // backward Euler vs trapezoidal oracle on a slow first-order lag
    DiscreteTf lag(RationalTransferFunction(Polynomial{1.0}, Polynomial{1.0, 0.01}));
    std::vector<double> xl;
    double yl = 0.0;
    for (int k = 0; k < 200; ++k) yl = lag.step(xl, 1.0, dt);
    CHECK(yl == doctest::Approx(1.0 - std::exp(-200 * dt / 0.01)).epsilon(2e-3));

    auto bad = g;
    bad.cmp_den = Polynomial{-1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), gfm::Error);
    auto bad2 = g;
    bad2.T_v = 0.0;
    CHECK_THROWS_AS(bad2.validate(), gfm::Error);
}

TEST_CASE("NaN measurement holds the last actuation") {
    auto g = mmc_gains();
    MmcControllerState s;
    MmcMeasurements m{g.W_t_star + 1e4, {100.0, 0.0}, 640e3, 10.0, 200e3};
    auto a = mmc_control_step(g, s, m, dt);
    m.U_dc = NAN;
    auto b = mmc_control_step(g, s, m, dt);
    CHECK(s.fault);
    CHECK(b.u_sum0_cmd == a.u_sum0_cmd);
    CHECK(b.theta_unwrapped == a.theta_unwrapped);
    CHECK(b.u_diff_cmd.d == a.u_diff_cmd.d);

    auto wg = wtg_gains();
    WtgControllerState ws;
    WtgMeasurements wm{wg.W_link_star, 132e3, 1800.0, 1800.0, {1000.0, 0.0}, 49e3};
    auto wa = wtg_control_step(wg, ws, wm, dt);
    wm.W_link = NAN;
    auto wb = wtg_control_step(wg, ws, wm, dt);
    CHECK(ws.fault);
    CHECK(wb.P_MSC_cmd == wa.P_MSC_cmd);
}

TEST_CASE("controller determinism") {
    auto g = mmc_gains();
    auto run = [&] {
        MmcControllerState s;
        std::vector<double> out;
        for (int k = 0; k < 2000; ++k) {
            MmcMeasurements m{g.W_t_star + 3e4 * std::sin(k * 0.01), {300.0 + k, -50.0}, 639e3 + k, 100.0 - k * 0.1,
                              210e3};
            auto a = mmc_control_step(g, s, m, dt);
            out.push_back(a.u_sum0_cmd);
            out.push_back(a.theta);
            out.push_back(a.u_diff_cmd.q);
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("WTG controller") {
    auto g = wtg_gains();
    WtgControllerState s;
    WtgMeasurements m{g.W_link_star, 132e3, 1800.0, 1800.0, {1000.0, 0.0}, 49e3};
    wtg_control_step(g, s, m, dt);
    CHECK(s.rocof_est == 0.0);

    // steady -0.2 Hz with 5% droop on 1000 MW: P_fr = +80 MW
    g.K_Rw = 1000e6 / (0.05 * 50.0);
    CHECK(g.K_Rw == doctest::Approx(4e8));
    m.W_link = g.W_link_star - 0.2 / g.K_Hlink;
    auto a = wtg_control_step(g, s, m, dt);
    CHECK(s.delta_f_wtg == doctest::Approx(-0.2));
    CHECK(s.P_fr == doctest::Approx(80e6));
    CHECK(a.P_MSC_cmd == doctest::Approx(g.P_set + 80e6));

    // RoCoF estimate against K_Hlink C U dU/dt for consistent currents
    const double C = 5.17e-3, U = 132e3 * 1.004, dUdt = -2000.0;
    const double dI = C * dUdt;  // I_MSC - I_GSC
    m.U_link = U;
    m.I_MSC = 1800.0;
    m.I_GSC = 1800.0 - dI;
    wtg_control_step(g, s, m, dt);
    CHECK(s.rocof_est == doctest::Approx(g.K_Hlink * C * U * dUdt).epsilon(0.01));
    // under-frequency with falling frequency raises the command
    g.K_Hw = 2e7;
    WtgControllerState s2;
    m.W_link = g.W_link_star - 0.1 / g.K_Hlink;
    auto b = wtg_control_step(g, s2, m, dt);
    CHECK(s2.rocof_est < 0.0);
    CHECK(b.P_MSC_cmd > g.P_set);
}

TEST_CASE("locality audit") {
    auto mg = mmc_gains();
    auto wg = wtg_gains();
    auto ok = locality_audit({describe(mg, ControllerKind::mmc_onshore), describe(mg, ControllerKind::mmc_offshore),
                              describe(wg)});
    CHECK(ok.pass);
    CHECK(ok.violations.empty());
    CHECK(ok.lines.size() == 3);

    wg.remote_frequency_hook = true;
    auto bad = locality_audit({describe(wg)});
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].find("f_on") != std::string::npos);

    // the hook really changes behaviour: P_fr follows the remote frequency
    WtgControllerState s;
    WtgMeasurements m{wg.W_link_star, 132e3, 1800.0, 1800.0, {}, 49e3};
    m.remote_f_on = 49.9;
    wtg_control_step(wg, s, m, dt);
    CHECK(s.P_fr == doctest::Approx(0.1 * wg.K_Rw));
}
