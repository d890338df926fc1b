#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace buckforge {

// Rational function in s. Coefficients are stored in descending powers of s.
class TransferFunction {
public:
    // Leading zeros are trimmed from both polynomials. Throws InvalidParameter if `den` is
    // empty or identically zero.
    TransferFunction(std::vector<double> num, std::vector<double> den);

    static TransferFunction constant(double k) { return TransferFunction({k}, {1.0}); }

    const std::vector<double>& num() const noexcept { return num_; }
    const std::vector<double>& den() const noexcept { return den_; }

    std::size_t num_degree() const noexcept { return num_.size() - 1; }
    std::size_t den_degree() const noexcept { return den_.size() - 1; }

    bool is_proper() const noexcept { return num_degree() <= den_degree(); }
    bool is_zero() const noexcept;

    // Horner evaluation at an arbitrary complex point.
    std::complex<double> operator()(std::complex<double> s) const;

    bool operator==(const TransferFunction&) const = default;

private:
    std::vector<double> num_;
    std::vector<double> den_;
};

// Horner evaluation of a real-coefficient polynomial (descending powers).
std::complex<double> polyval(std::span<const double> coeffs, std::complex<double> s);

struct FrequencyPoint {
    double omega = 0.0;         // rad/s
    double magnitude_db = 0.0;  // dB
    double phase_deg = 0.0;     // deg, unwrapped along the sweep
};

struct MarginReport {
    std::optional<double> gain_crossover;   // rad/s
    std::optional<double> phase_crossover;  // rad/s
    double gain_margin_db = std::numeric_limits<double>::infinity();
    std::optional<double> phase_margin_deg;
    bool stable_loop = true;
    int gain_crossover_count = 0;
    int phase_crossover_count = 0;
};

struct MarginOptions {
    double omega_min = 1e-2;
    double omega_max = 1e7;
    int points_per_decade = 400;
    double relative_tolerance = 1e-10;
};

// tf(j omega). Throws PoleOnImaginaryAxis if the denominator vanishes there.
std::complex<double> evaluate(const TransferFunction& tf, double omega);

inline double magnitude_db(std::complex<double> v) { return 20.0 * std::log10(std::abs(v)); }

// Log-spaced sweep including both end points, with continuous (unwrapped) phase.
// The first point's phase is anchored to the low-frequency asymptote so that
// origin poles contribute -90 deg each regardless of the starting frequency.
std::vector<FrequencyPoint> bode_sweep(const TransferFunction& tf, double omega_min, double omega_max,
                                       int points_per_decade);

MarginReport stability_margins(const TransferFunction& loop_tf, const MarginOptions& options = {});

// G / (1 + G)
TransferFunction close_unity_loop(const TransferFunction& g);

// g1 * g2 without pole-zero cancellation.
TransferFunction series(const TransferFunction& g1, const TransferFunction& g2);

TransferFunction scale(const TransferFunction& g, double k);

// Roots of the denominator. Degree <= 3 only.
std::vector<std::complex<double>> poles(const TransferFunction& tf);

// Roots of a real polynomial of degree <= 3 (descending coefficients).
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b);
std::vector<double> poly_add(std::span<const double> a, std::span<const double> b);

// Ratio of constant terms (value at s = 0). Throws PoleOnImaginaryAxis when den(0) = 0.
double dc_gain(const TransferFunction& tf);

}  // namespace buckforge
