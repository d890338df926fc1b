#include "buckforge/timedomain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "buckforge/error.hpp"
#include "buckforge/linalg.hpp"

namespace buckforge {

namespace {

// First time the (sign-normalised) response reaches `level`, by linear interpolation.
double first_crossing(const Trajectory& traj, double sign, double level) {
    const auto& t = traj.times;
    const auto& y = traj.values;
    if (sign * y[0] >= level) {
        return t[0];
    }
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double yi = sign * y[i];
        if (yi >= level) {
            const double yp = sign * y[i - 1];
            return t[i - 1] + (level - yp) / (yi - yp) * (t[i] - t[i - 1]);
        }
    }
    return t.back();
}

}  // namespace

Trajectory step_response(const TransferFunction& tf, double t_end, std::size_t samples) {
    if (!tf.is_proper()) {
        throw InvalidParameter("tf", "step response requires a proper transfer function");
    }
    if (tf.den_degree() > 3) {
        throw UnsupportedDegree("step response supports denominators of degree <= 3");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw InvalidParameter("t_end", "must be a finite positive duration");
    }
    if (samples < 10) {
        throw InvalidParameter("samples", "at least 10 samples are required");
    }

    const std::size_t n = tf.den_degree();
    const double lead = tf.den().front();
    std::vector<double> a(n + 1);
    std::vector<double> b(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) a[i] = tf.den()[i] / lead;
    const auto& num = tf.num();
    for (std::size_t i = 0; i < num.size(); ++i) b[n + 1 - num.size() + i] = num[i] / lead;

    Trajectory traj;
    traj.times.resize(samples);
    traj.values.resize(samples);
    const double dt = t_end / static_cast<double>(samples - 1);
    for (std::size_t k = 0; k < samples; ++k) traj.times[k] = dt * static_cast<double>(k);

    const double feedthrough = b[0];
    if (n == 0) {
        std::fill(traj.values.begin(), traj.values.end(), feedthrough);
        return traj;
    }

    // Controllable canonical form. x_k' = x_{k+1}; x_n' = -sum a_{n-k} x_{k+1} + u.
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd am = Eigen::MatrixXd::Zero(ni, ni);
    for (Eigen::Index i = 0; i + 1 < ni; ++i) am(i, i + 1) = 1.0;
    for (Eigen::Index j = 0; j < ni; ++j) am(ni - 1, j) = -a[n - static_cast<std::size_t>(j)];
    Eigen::VectorXd bm = Eigen::VectorXd::Zero(ni);
    bm(ni - 1) = 1.0;
    Eigen::RowVectorXd cm(ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
        const std::size_t k = n - static_cast<std::size_t>(j);
        cm(j) = b[k] - feedthrough * a[k];
    }

    const auto step = linalg::discretize_zoh(am, bm, dt);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ni);
    for (std::size_t k = 0; k < samples; ++k) {
        traj.values[k] = cm.dot(x) + feedthrough;
        x = step.phi * x + step.gamma;
    }

    const auto p = poles(tf);
    traj.unstable = std::any_of(p.begin(), p.end(), [](const auto& z) { return z.real() >= 0.0; });
    return traj;
}

StepMetrics step_metrics(const Trajectory& traj, double reference, double settling_band) {
    const auto& t = traj.times;
    const auto& y = traj.values;
    if (y.size() < 2 || t.size() != y.size()) {
        throw InvalidParameter("traj", "trajectory needs at least 2 samples with matching times");
    }
    if (!(settling_band > 0.0 && settling_band < 1.0)) {
        throw InvalidParameter("settling_band", "must lie in (0, 1)");
    }

    const std::size_t n = y.size();
    const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);
    const auto tail_begin = y.end() - static_cast<std::ptrdiff_t>(tail);
    const double final_value = std::accumulate(tail_begin, y.end(), 0.0) / static_cast<double>(tail);
    const auto [tail_min, tail_max] = std::minmax_element(tail_begin, y.end());
    const double spread = *tail_max - *tail_min;
    if (!std::isfinite(final_value) || spread > 0.01 * std::abs(final_value)) {
        throw NotSettled(fmt::format("trajectory not settled: last 10% of samples spread {:.4g} around final value {:.4g}",
                                     spread, final_value));
    }

    StepMetrics m;
    m.final_value = final_value;
    m.steady_state_error = reference - final_value;
    if (final_value == 0.0) {
        return m;
    }
    const double sign = final_value > 0.0 ? 1.0 : -1.0;
    const double fv = sign * final_value;

    m.delay_time = first_crossing(traj, sign, 0.5 * fv);
    m.rise_time = first_crossing(traj, sign, 0.9 * fv) - first_crossing(traj, sign, 0.1 * fv);

    const double band = settling_band * fv;
    std::size_t last_out = n;
    for (std::size_t i = n; i-- > 0;) {
        if (std::abs(sign * y[i] - fv) > band) {
            last_out = i;
            break;
        }
    }
    if (last_out == n) {
        m.settling_time = t[0];
    } else if (last_out + 1 < n) {
        const double e0 = std::abs(sign * y[last_out] - fv);
        const double e1 = std::abs(sign * y[last_out + 1] - fv);
        const double frac = (e0 - band) / (e0 - e1);
        m.settling_time = t[last_out] + frac * (t[last_out + 1] - t[last_out]);
    } else {
        m.settling_time = t.back();
    }

    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (sign * y[i] > sign * y[peak]) peak = i;
    }
    double peak_t = t[peak];
    double peak_y = sign * y[peak];
    if (peak > 0 && peak + 1 < n) {
        // Parabola through the three samples around the discrete maximum.
        const double y0 = sign * y[peak - 1];
        const double y1 = sign * y[peak];
        const double y2 = sign * y[peak + 1];
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom < 0.0) {
            const double offset = 0.5 * (y0 - y2) / denom;
            const double dt = t[peak + 1] - t[peak];
            peak_t = t[peak] + offset * dt;
            peak_y = y1 - 0.25 * (y0 - y2) * offset;
        }
    }
    m.peak_time = peak_t;
    m.peak_value = sign * peak_y;
    // A peak inside the final-value noise floor (tail spread) is not an overshoot.
    m.max_overshoot_pct = (peak_y - fv) > spread ? (peak_y - fv) / fv * 100.0 : 0.0;
    return m;
}

}  // namespace buckforge
