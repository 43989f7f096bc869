#pragma once

// Real-coefficient polynomial and transfer-function algebra in the Laplace
// variable s, with the frequency- and time-response analysis the tuning and
// verification code relies on.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace gfm::linsys {

using Complex = std::complex<double>;

/// Polynomial in s, coefficients in ascending powers. The zero polynomial is {0}.
class Polynomial {
public:
    Polynomial();
    explicit Polynomial(std::vector<double> ascending);
    Polynomial(std::initializer_list<double> ascending);

    /// Builds prod (s - r) for the given roots; complex roots must come in conjugate pairs.
    static Polynomial from_roots(std::span<const Complex> roots, double gain = 1.0);
    static Polynomial monomial(std::size_t power, double coeff = 1.0);

    const std::vector<double>& coeffs() const noexcept { return c_; }
    std::size_t degree() const noexcept { return c_.size() - 1; }
    bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }
    double leading() const noexcept { return c_.back(); }
    double operator[](std::size_t k) const noexcept { return k < c_.size() ? c_[k] : 0.0; }

    double operator()(double s) const;
    Complex operator()(Complex s) const;

    Polynomial derivative() const;
    /// Quotient and remainder of Euclidean division.
    std::pair<Polynomial, Polynomial> divmod(const Polynomial& divisor) const;
    double max_abs_coeff() const;
    bool all_finite() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double k, const Polynomial& p);
    friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

private:
    void normalize();
    std::vector<double> c_;
};

std::ostream& operator<<(std::ostream& os, const Polynomial& p);

/// All roots with multiplicity. Companion-matrix eigenvalues followed by a
/// Newton polish; complex roots are returned as exact conjugate pairs.
std::vector<Complex> roots(const Polynomial& p);

/// num(s)/den(s), stored with a monic denominator.
class RationalTransferFunction {
public:
    RationalTransferFunction(Polynomial num, Polynomial den);
    static RationalTransferFunction gain(double k);
    /// Pure integrator k/s.
    static RationalTransferFunction integrator(double k = 1.0);

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }
    std::size_t order() const noexcept { return den_.degree(); }
    bool is_proper() const noexcept { return num_.degree() <= den_.degree() || num_.is_zero(); }
    bool is_strictly_proper() const noexcept { return num_.degree() < den_.degree() || num_.is_zero(); }

    Complex operator()(Complex s) const { return num_(s) / den_(s); }
    /// Value at s = 0; +inf magnitude when a pole sits at the origin.
    double dc_gain() const;

private:
    Polynomial num_;
    Polynomial den_;
};

RationalTransferFunction series(const RationalTransferFunction& a, const RationalTransferFunction& b);
RationalTransferFunction parallel(const RationalTransferFunction& a, const RationalTransferFunction& b);
/// a/(1+a).
RationalTransferFunction feedback_unity(const RationalTransferFunction& a);
RationalTransferFunction scale(const RationalTransferFunction& a, double k);

std::vector<Complex> poles(const RationalTransferFunction& tf);
std::vector<Complex> zeros(const RationalTransferFunction& tf);
/// True when every pole has a strictly negative real part.
bool is_stable(const RationalTransferFunction& tf);

/// num(jw)/den(jw) for w > 0.
Complex freq_response(const RationalTransferFunction& tf, double omega);

struct StabilityMargins {
    double phase_margin_deg{0.0};
    double gain_crossover_rad_s{0.0};
    double gain_margin_db{std::numeric_limits<double>::infinity()};
    std::optional<double> phase_crossover_rad_s;
    bool multiple_crossovers{false};
};

/// Classical margins of an open loop over [omega_lo, omega_hi]. The phase is
/// unwrapped on a logarithmic grid anchored at the low-frequency asymptote.
StabilityMargins margins(const RationalTransferFunction& tf, double omega_lo, double omega_hi);

struct BodePoint {
    double omega_rad_s;
    double mag_db;
    double phase_deg;
};

/// Log-spaced Bode data with continuous (unwrapped) phase.
std::vector<BodePoint> bode(const RationalTransferFunction& tf, double omega_lo, double omega_hi,
                            int points_per_decade = 50);

/// Writes the `omega_rad_s,mag_db,phase_deg` CSV body (header included).
void write_bode_csv(std::ostream& os, std::span<const BodePoint> points);

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> y;

    TimeSeries() = default;
    TimeSeries(std::vector<double> t_, std::vector<double> y_);
    std::size_t size() const noexcept { return t.size(); }
    /// Linear interpolation, clamped at the ends.
    double at(double time) const;
};

TimeSeries step_response(const RationalTransferFunction& tf, double t_end, double dt);
TimeSeries ramp_response(const RationalTransferFunction& tf, double t_end, double dt);

struct StepMetrics {
    double final_value{0.0};
    double peak{0.0};
    double overshoot_pct{0.0};
    double peak_time{0.0};
    double settling_time{0.0};  // 2% band
};

StepMetrics step_metrics(const TimeSeries& response, double final_value, double band = 0.02);

}  // namespace gfm::linsys
