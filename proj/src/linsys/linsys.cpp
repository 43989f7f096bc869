#include "gfm/linsys.hpp"

#include "gfm/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace gfm::linsys {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRad2Deg = 180.0 / kPi;

void require_finite(const std::vector<double>& c, const char* what) {
    for (double v : c) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_input, std::string(what) + ": non-finite coefficient");
        }
    }
}

}  // namespace

// ---------------------------------------------------------------- Polynomial

Polynomial::Polynomial() : c_{0.0} {}

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) { normalize(); }

Polynomial::Polynomial(std::initializer_list<double> ascending) : c_(ascending) { normalize(); }

void Polynomial::normalize() {
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
    if (c_.empty()) c_.push_back(0.0);
}

Polynomial Polynomial::from_roots(std::span<const Complex> rts, double gain) {
    std::vector<Complex> acc{Complex(gain, 0.0)};
    for (const Complex& r : rts) {
        std::vector<Complex> next(acc.size() + 1, Complex(0.0, 0.0));
        for (std::size_t k = 0; k < acc.size(); ++k) {
            next[k + 1] += acc[k];
            next[k] -= r * acc[k];
        }
        acc = std::move(next);
    }
    std::vector<double> re(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) re[k] = acc[k].real();
    return Polynomial(std::move(re));
}

Polynomial Polynomial::monomial(std::size_t power, double coeff) {
    std::vector<double> c(power + 1, 0.0);
    c[power] = coeff;
    return Polynomial(std::move(c));
}

double Polynomial::operator()(double s) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Complex Polynomial::operator()(Complex s) const {
    Complex acc(0.0, 0.0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (c_.size() == 1) return Polynomial();
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
}

std::pair<Polynomial, Polynomial> Polynomial::divmod(const Polynomial& divisor) const {
    if (divisor.is_zero()) throw Error(ErrorCode::invalid_input, "polynomial division by zero");
    if (degree() < divisor.degree()) return {Polynomial(), *this};
    std::vector<double> rem = c_;
    const std::size_t nd = divisor.degree();
    std::vector<double> q(degree() - nd + 1, 0.0);
    for (std::size_t k = q.size(); k-- > 0;) {
        const double coef = rem[k + nd] / divisor.leading();
        q[k] = coef;
        for (std::size_t j = 0; j <= nd; ++j) rem[k + j] -= coef * divisor.c_[j];
        rem[k + nd] = 0.0;
    }
    rem.resize(std::max<std::size_t>(nd, 1));
    return {Polynomial(std::move(q)), Polynomial(std::move(rem))};
}

double Polynomial::max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

bool Polynomial::all_finite() const {
    return std::all_of(c_.begin(), c_.end(), [](double v) { return std::isfinite(v); });
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] + b[k];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] - b[k];
    return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& p) {
    std::vector<double> c = p.c_;
    for (double& v : c) v *= k;
    return Polynomial(std::move(c));
}

std::ostream& operator<<(std::ostream& os, const Polynomial& p) {
    const auto& c = p.coeffs();
    bool first = true;
    for (std::size_t k = c.size(); k-- > 0;) {
        if (c[k] == 0.0 && c.size() > 1) continue;
        if (!first) os << (c[k] < 0 ? " - " : " + ");
        else if (c[k] < 0) os << "-";
        os << std::abs(c[k]);
        if (k >= 1) os << "*s";
        if (k >= 2) os << "^" << k;
        first = false;
    }
    return os;
}

// --------------------------------------------------------------------- roots

std::vector<Complex> roots(const Polynomial& p) {
    require_finite(p.coeffs(), "roots");
    if (p.is_zero()) throw Error(ErrorCode::invalid_input, "roots of the zero polynomial");

    std::vector<Complex> out;
    std::vector<double> c = p.coeffs();
    // exact roots at the origin
    std::size_t zeros_at_origin = 0;
    while (c.size() > 1 && c.front() == 0.0) {
        c.erase(c.begin());
        ++zeros_at_origin;
    }
    out.assign(zeros_at_origin, Complex(0.0, 0.0));
    const std::size_t n = c.size() - 1;
    if (n == 0) return out;

    // s = sigma * z keeps the companion matrix well scaled
    const double sigma = std::pow(std::abs(c[0] / c[n]), 1.0 / static_cast<double>(n));
    std::vector<double> b(n + 1);
    double sk = 1.0;
    for (std::size_t k = 0; k <= n; ++k) {
        b[k] = c[k] * sk;
        sk *= sigma;
    }

    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) comp(0, static_cast<Eigen::Index>(k)) = -b[n - 1 - k] / b[n];
    for (std::size_t k = 1; k < n; ++k) comp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::invalid_input, "root finding failed");

    const Polynomial reduced(c);
    const Polynomial dreduced = reduced.derivative();
    std::vector<Complex> found;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        Complex z = es.eigenvalues()(k) * sigma;
        // Newton polish, kept only while it improves the residual
        for (int it = 0; it < 8; ++it) {
            const Complex f = reduced(z);
            const Complex df = dreduced(z);
            if (std::abs(df) == 0.0) break;
            const Complex zn = z - f / df;
            if (!(std::abs(reduced(zn)) < std::abs(f))) break;
            z = zn;
        }
        found.push_back(z);
    }

    // pair complex roots with their conjugates so the set is exactly symmetric
    std::vector<bool> used(found.size(), false);
    const double scale = std::max(sigma, 1e-300);
    for (std::size_t i = 0; i < found.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        const Complex z = found[i];
        if (std::abs(z.imag()) <= 1e-9 * std::max(std::abs(z), scale * 1e-3)) {
            out.emplace_back(z.real(), 0.0);
            continue;
        }
        std::size_t best = found.size();
        double best_d = INFINITY;
        for (std::size_t j = 0; j < found.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(found[j] - std::conj(z));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == found.size()) {
            out.emplace_back(z.real(), 0.0);
            continue;
        }
        used[best] = true;
        const double re = 0.5 * (z.real() + found[best].real());
        const double im = 0.5 * (std::abs(z.imag()) + std::abs(found[best].imag()));
        out.emplace_back(re, im);
        out.emplace_back(re, -im);
    }
    return out;
}

// -------------------------------------------------- RationalTransferFunction

RationalTransferFunction::RationalTransferFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
    require_finite(num_.coeffs(), "transfer function numerator");
    require_finite(den_.coeffs(), "transfer function denominator");
    if (den_.is_zero()) throw Error(ErrorCode::invalid_input, "transfer function with zero denominator");
    const double lead = den_.leading();
    if (lead != 1.0) {
        num_ = (1.0 / lead) * num_;
        den_ = (1.0 / lead) * den_;
    }
}

RationalTransferFunction RationalTransferFunction::gain(double k) {
    return {Polynomial{k}, Polynomial{1.0}};
}

RationalTransferFunction RationalTransferFunction::integrator(double k) {
    return {Polynomial{k}, Polynomial{0.0, 1.0}};
}

double RationalTransferFunction::dc_gain() const {
    const auto& n = num_.coeffs();
    const auto& d = den_.coeffs();
    std::size_t kn = 0, kd = 0;
    while (kn + 1 < n.size() && n[kn] == 0.0) ++kn;
    while (kd + 1 < d.size() && d[kd] == 0.0) ++kd;
    if (num_.is_zero()) return 0.0;
    if (kn > kd) return 0.0;
    if (kn < kd) return std::copysign(INFINITY, n[kn] / d[kd]);
    return n[kn] / d[kd];
}

RationalTransferFunction series(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    return {a.num() * b.num(), a.den() * b.den()};
}

RationalTransferFunction parallel(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    return {a.num() * b.den() + b.num() * a.den(), a.den() * b.den()};
}

RationalTransferFunction feedback_unity(const RationalTransferFunction& a) {
    return {a.num(), a.den() + a.num()};
}

RationalTransferFunction scale(const RationalTransferFunction& a, double k) {
    return {k * a.num(), a.den()};
}

std::vector<Complex> poles(const RationalTransferFunction& tf) {
    if (tf.den().degree() < 1) throw Error(ErrorCode::invalid_input, "transfer function has no poles");
    return roots(tf.den());
}

std::vector<Complex> zeros(const RationalTransferFunction& tf) {
    if (tf.num().is_zero() || tf.num().degree() == 0) return {};
    return roots(tf.num());
}

bool is_stable(const RationalTransferFunction& tf) {
    if (tf.den().degree() == 0) return true;
    for (const Complex& p : poles(tf)) {
        if (!(p.real() < 0.0)) return false;
    }
    return true;
}

Complex freq_response(const RationalTransferFunction& tf, double omega) {
    if (!std::isfinite(omega)) throw Error(ErrorCode::invalid_input, "non-finite frequency");
    const Complex s(0.0, omega);
    const Complex d = tf.den()(s);
    double mag_scale = 0.0;
    double wk = 1.0;
    for (double c : tf.den().coeffs()) {
        mag_scale += std::abs(c) * wk;
        wk *= std::abs(omega);
    }
    if (std::abs(d) <= 1e-13 * mag_scale) {
        std::ostringstream msg;
        msg << "denominator vanishes at omega = " << omega << " rad/s";
        throw Error(ErrorCode::pole_on_axis, msg.str());
    }
    return tf.num()(s) / d;
}

// ------------------------------------------------------------------- margins

namespace {

// Continuous phase (rad): sum of factor angles, then snapped onto the exact
// arg of G(jw) so rounding in the roots does not leak into the result.
class PhaseTracker {
public:
    explicit PhaseTracker(const RationalTransferFunction& tf)
        : tf_(tf), z_(zeros(tf)), p_(tf.den().degree() > 0 ? poles(tf) : std::vector<Complex>{}) {
        const auto& n = tf.num().coeffs();
        lead_negative_ = !tf.num().is_zero() && n.back() < 0.0;
    }

    double operator()(double omega) const {
        const Complex s(0.0, omega);
        double ph = lead_negative_ ? -kPi : 0.0;
        for (const Complex& z : z_) ph += std::arg(s - z);
        for (const Complex& p : p_) ph -= std::arg(s - p);
        const double exact = std::arg(freq_response(tf_, omega));
        const double k = std::round((ph - exact) / (2.0 * kPi));
        return exact + 2.0 * kPi * k;
    }

private:
    const RationalTransferFunction& tf_;
    std::vector<Complex> z_;
    std::vector<Complex> p_;
    bool lead_negative_{false};
};

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    const double decades = std::log10(hi / lo);
    const int n = std::max(2, static_cast<int>(std::ceil(decades * per_decade)) + 1);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = lo * std::pow(10.0, decades * k / (n - 1));
    w.back() = hi;
    return w;
}

template <class F>
double bisect_log(F&& f, double a, double b, double fa) {
    // f changes sign on [a, b]; stop at 1e-6 relative width
    while (b / a - 1.0 > 1e-6 * 0.5) {
        const double m = std::sqrt(a * b);
        const double fm = f(m);
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return std::sqrt(a * b);
}

}  // namespace

StabilityMargins margins(const RationalTransferFunction& tf, double omega_lo, double omega_hi) {
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo)) {
        throw Error(ErrorCode::invalid_input, "margins requires 0 < omega_lo < omega_hi");
    }
    const auto grid = log_grid(omega_lo, omega_hi, 200);
    auto lg = [&](double w) { return std::log(std::abs(freq_response(tf, w))); };

    std::vector<double> g(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) g[k] = lg(grid[k]);

    StabilityMargins m;
    int crossings = 0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        if ((g[k] > 0.0) != (g[k + 1] > 0.0)) {
            if (crossings == 0) m.gain_crossover_rad_s = bisect_log(lg, grid[k], grid[k + 1], g[k]);
            ++crossings;
        }
    }
    if (crossings == 0) throw Error(ErrorCode::no_crossover, "no gain crossover in the requested range");
    m.multiple_crossovers = crossings > 1;

    const PhaseTracker phase(tf);
    m.phase_margin_deg = 180.0 + phase(m.gain_crossover_rad_s) * kRad2Deg;

    // phase crossovers: phase = -180 deg modulo 360
    auto wrapped = [&](double w) {
        const double ph = phase(w) + kPi;  // zero at a crossing
        return ph - 2.0 * kPi * std::round(ph / (2.0 * kPi));
    };
    double worst_gain = -INFINITY;
    double prev = wrapped(grid[0]);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double next = wrapped(grid[k + 1]);
        // a genuine crossing, not the +-pi wrap of the helper itself
        if ((prev > 0.0) != (next > 0.0) && std::abs(prev - next) < kPi) {
            const double wc = bisect_log(wrapped, grid[k], grid[k + 1], prev);
            const double gain = lg(wc);
            if (gain > worst_gain) {
                worst_gain = gain;
                m.phase_crossover_rad_s = wc;
            }
        }
        prev = next;
    }
    if (m.phase_crossover_rad_s) m.gain_margin_db = -20.0 * worst_gain / std::log(10.0);
    return m;
}

std::vector<BodePoint> bode(const RationalTransferFunction& tf, double omega_lo, double omega_hi,
                            int points_per_decade) {
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo) || points_per_decade < 1) {
        throw Error(ErrorCode::invalid_input, "bode requires 0 < omega_lo < omega_hi");
    }
    const PhaseTracker phase(tf);
    std::vector<BodePoint> out;
    for (double w : log_grid(omega_lo, omega_hi, points_per_decade)) {
        const Complex g = freq_response(tf, w);
        out.push_back({w, 20.0 * std::log10(std::abs(g)), phase(w) * kRad2Deg});
    }
    return out;
}

void write_bode_csv(std::ostream& os, std::span<const BodePoint> points) {
    const auto old_prec = os.precision(10);
    os << "omega_rad_s,mag_db,phase_deg\n";
    for (const auto& p : points) os << p.omega_rad_s << ',' << p.mag_db << ',' << p.phase_deg << '\n';
    os.precision(old_prec);
}

// -------------------------------------------------------------- time domain

TimeSeries::TimeSeries(std::vector<double> t_, std::vector<double> y_) : t(std::move(t_)), y(std::move(y_)) {
    if (t.size() != y.size() || t.size() < 2) throw Error(ErrorCode::invalid_input, "time series length mismatch");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (!(t[k] > t[k - 1])) throw Error(ErrorCode::invalid_input, "time grid not strictly increasing");
    }
}

double TimeSeries::at(double time) const {
    if (time <= t.front()) return y.front();
    if (time >= t.back()) return y.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t k = static_cast<std::size_t>(it - t.begin());
    const double a = (time - t[k - 1]) / (t[k] - t[k - 1]);
    return y[k - 1] + a * (y[k] - y[k - 1]);
}

namespace {

template <class Input>
TimeSeries simulate_tf(const RationalTransferFunction& tf, double t_end, double dt, Input u) {
    if (!tf.is_proper()) throw Error(ErrorCode::improper_system, "transfer function is improper");
    if (!(dt > 0.0) || !(t_end > 0.0) || dt > t_end / 100.0 * (1.0 + 1e-12)) {
        throw Error(ErrorCode::invalid_input, "time response requires 0 < dt <= t_end/100");
    }
    const std::size_t n = tf.den().degree();
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<double> t(steps + 1), y(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;

    const double d = tf.num()[n];  // den is monic
    if (n == 0) {
        for (std::size_t k = 0; k <= steps; ++k) y[k] = d * u(t[k]);
        return {std::move(t), std::move(y)};
    }
    const Polynomial strict = tf.num() - d * tf.den();
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index k = 0; k + 1 < N; ++k) A(k, k + 1) = 1.0;
    for (Eigen::Index k = 0; k < N; ++k) A(N - 1, k) = -tf.den()[static_cast<std::size_t>(k)];
    Eigen::VectorXd B = Eigen::VectorXd::Zero(N);
    B(N - 1) = 1.0;
    Eigen::RowVectorXd C(N);
    for (Eigen::Index k = 0; k < N; ++k) C(k) = strict[static_cast<std::size_t>(k)];

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lhs(I - 0.5 * dt * A);
    const Eigen::MatrixXd rhs = I + 0.5 * dt * A;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    y[0] = C.dot(x) + d * u(t[0]);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double ubar = 0.5 * (u(t[k - 1]) + u(t[k]));
        x = lhs.solve(rhs * x + dt * B * ubar);
        y[k] = C.dot(x) + d * u(t[k]);
    }
    return {std::move(t), std::move(y)};
}

}  // namespace

TimeSeries step_response(const RationalTransferFunction& tf, double t_end, double dt) {
    return simulate_tf(tf, t_end, dt, [](double) { return 1.0; });
}

TimeSeries ramp_response(const RationalTransferFunction& tf, double t_end, double dt) {
    return simulate_tf(tf, t_end, dt, [](double tt) { return tt; });
}

StepMetrics step_metrics(const TimeSeries& r, double final_value, double band) {
    StepMetrics m;
    m.final_value = final_value;
    const double sign = final_value < 0.0 ? -1.0 : 1.0;
    std::size_t ipk = 0;
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (sign * r.y[k] > sign * r.y[ipk]) ipk = k;
    }
    m.peak = r.y[ipk];
    m.peak_time = r.t[ipk];
    const double ref = std::abs(final_value);
    m.overshoot_pct = ref > 0.0 ? std::max(0.0, sign * (m.peak - final_value) / ref * 100.0) : 0.0;
    const double tol = band * (ref > 0.0 ? ref : 1.0);
    m.settling_time = r.t.front();
    for (std::size_t k = r.size(); k-- > 0;) {
        if (std::abs(r.y[k] - final_value) > tol) {
            m.settling_time = k + 1 < r.size() ? r.t[k + 1] : r.t[k];
            break;
        }
    }
    return m;
}

}  // namespace gfm::linsys
