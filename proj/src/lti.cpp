#include "buckforge/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "buckforge/error.hpp"

namespace buckforge {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::vector<double> trim_leading_zeros(std::vector<double> p) {
    auto first = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
    if (first == p.end()) {
        return {0.0};
    }
    p.erase(p.begin(), first);
    return p;
}

// Number of trailing zero coefficients, i.e. the multiplicity of the root at s = 0.
std::size_t origin_multiplicity(const std::vector<double>& p) {
    std::size_t n = 0;
    for (auto it = p.rbegin(); it != p.rend() && *it == 0.0; ++it) {
        ++n;
    }
    return n;
}

double lowest_nonzero(const std::vector<double>& p) {
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        if (*it != 0.0) {
            return *it;
        }
    }
    return 0.0;
}

// Phase of tf(j omega) as omega -> 0+, from origin factors and the sign of the remaining DC ratio.
double low_frequency_phase_deg(const TransferFunction& tf) {
    const auto zeros = static_cast<double>(origin_multiplicity(tf.num()));
    const auto origin_poles = static_cast<double>(origin_multiplicity(tf.den()));
    const double ratio = lowest_nonzero(tf.num()) / lowest_nonzero(tf.den());
    return 90.0 * (zeros - origin_poles) + (ratio < 0.0 ? -180.0 : 0.0);
}

double wrap_deg(double d) {
    d = std::remainder(d, 360.0);
    return d;
}

std::vector<double> log_grid(double omega_min, double omega_max, int points_per_decade) {
    const double decades = std::log10(omega_max / omega_min);
    const auto intervals = std::max<long>(1, static_cast<long>(std::ceil(decades * points_per_decade - 1e-9)));
    std::vector<double> grid(static_cast<std::size_t>(intervals) + 1);
    for (long i = 0; i <= intervals; ++i) {
        grid[static_cast<std::size_t>(i)] = omega_min * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(intervals));
    }
    grid.back() = omega_max;
    return grid;
}

// Bisection on log(omega) for a sign change of f between lo and hi.
template <typename F>
double bisect_log(F&& f, double lo, double hi, double rel_tol) {
    double f_lo = f(lo);
    for (int iter = 0; iter < 200 && (hi - lo) > rel_tol * lo; ++iter) {
        const double mid = std::sqrt(lo * hi);
        const double f_mid = f(mid);
        if (f_mid == 0.0) {
            return mid;
        }
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

bool sign_change(double a, double b) { return (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0); }

}  // namespace

TransferFunction::TransferFunction(std::vector<double> num, std::vector<double> den) {
    if (den.empty()) {
        throw InvalidParameter("den", "denominator must be nonempty");
    }
    if (num.empty()) {
        num = {0.0};
    }
    for (double c : num) {
        if (!std::isfinite(c)) throw InvalidParameter("num", "coefficients must be finite");
    }
    for (double c : den) {
        if (!std::isfinite(c)) throw InvalidParameter("den", "coefficients must be finite");
    }
    den_ = trim_leading_zeros(std::move(den));
    if (den_.size() == 1 && den_[0] == 0.0) {
        throw InvalidParameter("den", "denominator is identically zero");
    }
    num_ = trim_leading_zeros(std::move(num));
}

bool TransferFunction::is_zero() const noexcept {
    return std::all_of(num_.begin(), num_.end(), [](double c) { return c == 0.0; });
}

std::complex<double> TransferFunction::operator()(std::complex<double> s) const {
    return polyval(num_, s) / polyval(den_, s);
}

std::complex<double> polyval(std::span<const double> coeffs, std::complex<double> s) {
    std::complex<double> acc{0.0, 0.0};
    for (double c : coeffs) {
        acc = acc * s + c;
    }
    return acc;
}

std::complex<double> evaluate(const TransferFunction& tf, double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw InvalidParameter("omega", "frequency must be finite and non-negative");
    }
    const std::complex<double> s{0.0, omega};
    const std::complex<double> den = polyval(tf.den(), s);
    double scale = 0.0;
    double power = 1.0;
    for (auto it = tf.den().rbegin(); it != tf.den().rend(); ++it) {
        scale += std::abs(*it) * power;
        power *= omega;
    }
    if (std::abs(den) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
        throw PoleOnImaginaryAxis(omega);
    }
    return polyval(tf.num(), s) / den;
}

std::vector<FrequencyPoint> bode_sweep(const TransferFunction& tf, double omega_min, double omega_max,
                                       int points_per_decade) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || !std::isfinite(omega_max)) {
        throw InvalidParameter("omega_min", "sweep range must satisfy 0 < omega_min < omega_max");
    }
    if (points_per_decade < 1) {
        throw InvalidParameter("points_per_decade", "must be at least 1");
    }
    const std::vector<double> grid = log_grid(omega_min, omega_max, points_per_decade);
    std::vector<FrequencyPoint> out;
    out.reserve(grid.size());

    const double anchor = low_frequency_phase_deg(tf);
    double previous_raw = 0.0;
    double previous_unwrapped = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto v = evaluate(tf, grid[i]);
        const double raw = std::arg(v) * kRadToDeg;
        double unwrapped = 0.0;
        if (i == 0) {
            unwrapped = anchor + wrap_deg(raw - anchor);
        } else {
            unwrapped = previous_unwrapped + wrap_deg(raw - previous_raw);
        }
        out.push_back({grid[i], magnitude_db(v), unwrapped});
        previous_raw = raw;
        previous_unwrapped = unwrapped;
    }
    return out;
}

MarginReport stability_margins(const TransferFunction& loop_tf, const MarginOptions& options) {
    if (!loop_tf.is_proper()) {
        throw InvalidParameter("loop_tf", "loop transfer function must be proper");
    }
    const auto sweep = bode_sweep(loop_tf, options.omega_min, options.omega_max, options.points_per_decade);
    MarginReport report;
    if (loop_tf.is_zero()) {
        return report;
    }

    std::optional<std::size_t> first_gain;
    std::optional<std::size_t> first_phase;
    for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
        if (sign_change(sweep[i].magnitude_db, sweep[i + 1].magnitude_db)) {
            ++report.gain_crossover_count;
            if (!first_gain) first_gain = i;
        }
        if (sign_change(sweep[i].phase_deg + 180.0, sweep[i + 1].phase_deg + 180.0)) {
            ++report.phase_crossover_count;
            if (!first_phase) first_phase = i;
        }
    }

    // Unwrapped phase anywhere inside grid interval i, continuous from its left end.
    auto phase_in_interval = [&](std::size_t i, double omega) {
        const auto ref = evaluate(loop_tf, sweep[i].omega);
        const auto v = evaluate(loop_tf, omega);
        return sweep[i].phase_deg + std::arg(v / ref) * kRadToDeg;
    };

    if (first_gain) {
        const std::size_t i = *first_gain;
        const double wg = bisect_log([&](double w) { return std::log(std::abs(evaluate(loop_tf, w))); },
                                     sweep[i].omega, sweep[i + 1].omega, options.relative_tolerance);
        report.gain_crossover = wg;
        report.phase_margin_deg = 180.0 + phase_in_interval(i, wg);
    }
    if (first_phase) {
        const std::size_t i = *first_phase;
        const double wp = bisect_log([&](double w) { return phase_in_interval(i, w) + 180.0; }, sweep[i].omega,
                                     sweep[i + 1].omega, options.relative_tolerance);
        report.phase_crossover = wp;
        report.gain_margin_db = -magnitude_db(evaluate(loop_tf, wp));
    }

    const bool pm_ok = !report.phase_margin_deg || *report.phase_margin_deg > 0.0;
    const bool gm_ok = report.gain_margin_db > 0.0;
    report.stable_loop = pm_ok && gm_ok;
    return report;
}

std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<double> out(n, 0.0);
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(n - a.size()));
    for (std::size_t j = 0; j < b.size(); ++j) {
        out[n - b.size() + j] += b[j];
    }
    return out;
}

TransferFunction close_unity_loop(const TransferFunction& g) {
    auto den = poly_add(g.den(), g.num());
    if (std::all_of(den.begin(), den.end(), [](double c) { return c == 0.0; })) {
        throw std::domain_error("closed-loop denominator 1 + G is identically zero");
    }
    return TransferFunction(g.num(), std::move(den));
}

TransferFunction series(const TransferFunction& g1, const TransferFunction& g2) {
    return TransferFunction(poly_multiply(g1.num(), g2.num()), poly_multiply(g1.den(), g2.den()));
}

TransferFunction scale(const TransferFunction& g, double k) {
    auto num = g.num();
    for (double& c : num) c *= k;
    return TransferFunction(std::move(num), g.den());
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
    std::size_t first = 0;
    while (first < coeffs.size() && coeffs[first] == 0.0) ++first;
    coeffs = coeffs.subspan(first);
    if (coeffs.empty()) {
        throw InvalidParameter("coeffs", "polynomial is identically zero");
    }
    const std::size_t degree = coeffs.size() - 1;
    if (degree > 3) {
        throw UnsupportedDegree("root finding supports polynomials of degree <= 3 only");
    }
    const double lead = coeffs[0];

    auto quadratic = [](double a, double b, double c) -> std::vector<std::complex<double>> {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            if (q == 0.0) {
                return {0.0, 0.0};
            }
            return {q / a, c / q};
        }
        const double re = -b / (2.0 * a);
        const double im = std::sqrt(-disc) / (2.0 * std::abs(a));
        return {{re, im}, {re, -im}};
    };

    switch (degree) {
        case 0:
            return {};
        case 1:
            return {-coeffs[1] / lead};
        case 2:
            return quadratic(lead, coeffs[1], coeffs[2]);
        default:
            break;
    }

    // Monic cubic: one real root by bracketed bisection, then deflate to a quadratic.
    const double p = coeffs[1] / lead;
    const double q = coeffs[2] / lead;
    const double r = coeffs[3] / lead;
    auto f = [&](double x) { return ((x + p) * x + q) * x + r; };
    const double bound = 1.0 + std::max({std::abs(p), std::abs(q), std::abs(r)});
    double lo = -bound;
    double hi = bound;
    double root = 0.0;
    for (int iter = 0; iter < 2000; ++iter) {
        root = 0.5 * (lo + hi);
        if (root == lo || root == hi) break;
        const double fm = f(root);
        if (fm == 0.0) break;
        if (fm < 0.0) {
            lo = root;
        } else {
            hi = root;
        }
    }
    auto rest = quadratic(1.0, p + root, q + root * (p + root));
    rest.insert(rest.begin(), std::complex<double>{root, 0.0});
    return rest;
}

std::vector<std::complex<double>> poles(const TransferFunction& tf) { return polynomial_roots(tf.den()); }

double dc_gain(const TransferFunction& tf) {
    const double den0 = tf.den().back();
    if (den0 == 0.0) {
        throw PoleOnImaginaryAxis(0.0);
    }
    return tf.num().back() / den0;
}

}  // namespace buckforge
