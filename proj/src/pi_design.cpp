#include "buckforge/pi_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "buckforge/error.hpp"

namespace buckforge {

PIGains validate_gains(const PIGains& g) {
    if (!std::isfinite(g.kp) || g.kp < 0.0) {
        throw InvalidParameter("kp", "proportional gain must be finite and non-negative");
    }
    if (!std::isfinite(g.ki) || g.ki < 0.0) {
        throw InvalidParameter("ki", "integral gain must be finite and non-negative");
    }
    if (g.kp == 0.0 && g.ki == 0.0) {
        throw InvalidParameter("kp", "kp and ki cannot both be zero");
    }
    return g;
}

TransferFunction pi_tf(const PIGains& g) {
    const PIGains v = validate_gains(g);
    return TransferFunction({v.kp, v.ki}, {1.0, 0.0});
}

TransferFunction compensated_loop(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                                  const ConverterParams& p) {
    if (!plant.is_proper()) {
        throw InvalidParameter("plant", "plant must be proper");
    }
    double k = 1.0;
    if (cfg.include_modulator_gain) k /= p.vs;
    if (cfg.include_sensor_gain) k *= p.vref / p.vo_target;
    auto loop = series(plant, pi_tf(g));
    return k == 1.0 ? loop : scale(loop, k);
}

std::optional<double> phase_margin_for(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                                       const ConverterParams& p, const MarginOptions& options) {
    return stability_margins(compensated_loop(plant, g, cfg, p), options).phase_margin_deg;
}

TuningResult tune_kp_for_pm(const TransferFunction& plant, double ki, double target_pm, const LoopConfig& cfg,
                            const ConverterParams& p, const TuneOptions& options) {
    if (!(target_pm > 0.0 && target_pm < 180.0)) {
        throw InvalidParameter("target_pm", "phase margin target must lie in (0, 180) degrees");
    }
    if (!(ki > 0.0) || !std::isfinite(ki)) {
        throw InvalidParameter("ki", "integral gain must be positive for tuning");
    }
    if (!(options.kp_min > 0.0 && options.kp_max > options.kp_min) || options.grid_points_per_decade < 1) {
        throw InvalidParameter("kp_min", "invalid kp search bracket");
    }

    auto pm_error = [&](double kp) -> double {
        const auto pm = phase_margin_for(plant, {kp, ki}, cfg, p, options.margins);
        return pm ? *pm - target_pm : std::numeric_limits<double>::quiet_NaN();
    };

    const double decades = std::log10(options.kp_max / options.kp_min);
    const auto n = static_cast<int>(std::ceil(decades * options.grid_points_per_decade));
    std::vector<double> kp_grid(static_cast<std::size_t>(n) + 1);
    std::vector<double> err(kp_grid.size());
    for (int i = 0; i <= n; ++i) {
        kp_grid[static_cast<std::size_t>(i)] = options.kp_min * std::pow(10.0, decades * i / n);
    }
    kp_grid.back() = options.kp_max;

    double observed_min = std::numeric_limits<double>::infinity();
    double observed_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kp_grid.size(); ++i) {
        err[i] = pm_error(kp_grid[i]);
        if (std::isfinite(err[i])) {
            observed_min = std::min(observed_min, err[i] + target_pm);
            observed_max = std::max(observed_max, err[i] + target_pm);
        }
    }

    // Walk brackets from the largest kp down; a bracket straddling a jump in PM(kp) does not
    // converge to the target and is skipped.
    for (std::size_t i = kp_grid.size() - 1; i-- > 0;) {
        const double e_lo = err[i];
        const double e_hi = err[i + 1];
        if (!std::isfinite(e_lo) || !std::isfinite(e_hi)) continue;
        double kp = 0.0;
        if (e_hi == 0.0) {
            kp = kp_grid[i + 1];
        } else if (e_lo == 0.0) {
            kp = kp_grid[i];
        } else if ((e_lo < 0.0) != (e_hi < 0.0)) {
            double lo = kp_grid[i];
            double hi = kp_grid[i + 1];
            double f_lo = e_lo;
            for (int iter = 0; iter < 200 && (hi - lo) > 1e-12 * lo; ++iter) {
                const double mid = std::sqrt(lo * hi);
                const double f_mid = pm_error(mid);
                if (!std::isfinite(f_mid)) break;
                if (f_mid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((f_mid < 0.0) == (f_lo < 0.0)) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            kp = std::sqrt(lo * hi);
        } else {
            continue;
        }
        const PIGains gains{kp, ki};
        auto margins = stability_margins(compensated_loop(plant, gains, cfg, p), options.margins);
        if (margins.phase_margin_deg && std::abs(*margins.phase_margin_deg - target_pm) <= options.pm_tolerance_deg) {
            return {gains, margins};
        }
    }
    throw TargetUnreachable(target_pm, observed_min, observed_max);
}

std::optional<PublishedCase> published_case_for(const PIGains& g) {
    const PublishedCase cases[] = {
        {"kp=0.23, ki=1 (tuned for at least 75 deg phase margin)", {0.23, 1.0}, 75.0, true, -0.151, true},
        {"kp=10, ki=1", {10.0, 1.0}, 10.0, false, 0.0428, true},
    };
    for (const auto& c : cases) {
        if (std::abs(c.gains.kp - g.kp) <= 1e-12 * c.gains.kp && std::abs(c.gains.ki - g.ki) <= 1e-12 * c.gains.ki) {
            return c;
        }
    }
    return std::nullopt;
}

namespace {

std::string fmt_db(double v) { return std::isinf(v) ? std::string(v > 0 ? "+inf" : "-inf") : fmt::format("{:.4g}", v); }

PublishedComparison compare_with_published(const PublishedCase& pc, const MarginReport& m) {
    PublishedComparison cmp;
    cmp.published = pc;
    cmp.computed_phase_margin_deg = m.phase_margin_deg;
    cmp.computed_gain_margin_db = m.gain_margin_db;
    if (m.phase_margin_deg) {
        cmp.phase_margin_delta_deg = *m.phase_margin_deg - pc.phase_margin_deg;
        cmp.phase_margin_reproduced = pc.phase_margin_is_lower_bound
                                          ? *m.phase_margin_deg >= pc.phase_margin_deg
                                          : std::abs(*cmp.phase_margin_delta_deg) <= 5.0;
    }
    const std::string computed_pm = m.phase_margin_deg ? fmt::format("{:.4g}", *m.phase_margin_deg) : "none";
    if (!cmp.phase_margin_reproduced) {
        cmp.notes.push_back(fmt::format("published phase margin {}{:.4g} deg NOT reproduced: computed {} deg",
                                        pc.phase_margin_is_lower_bound ? ">= " : "", pc.phase_margin_deg, computed_pm));
    } else {
        cmp.notes.push_back(fmt::format("published phase margin {}{:.4g} deg consistent with computed {} deg",
                                        pc.phase_margin_is_lower_bound ? ">= " : "", pc.phase_margin_deg, computed_pm));
    }
    if (pc.stable_claim && pc.gain_margin_db <= 0.0) {
        cmp.notes.push_back(fmt::format(
            "published gain margin {:.4g} dB is non-positive yet the loop is described as stable; "
            "this contradicts the rule that a stable loop has positive gain margin",
            pc.gain_margin_db));
    }
    if (!m.phase_crossover) {
        cmp.notes.push_back(fmt::format(
            "computed loop phase never reaches -180 deg, so the gain margin is {} dB (published {:.4g} dB)",
            fmt_db(m.gain_margin_db), pc.gain_margin_db));
    } else {
        cmp.notes.push_back(fmt::format("computed gain margin {} dB vs published {:.4g} dB", fmt_db(m.gain_margin_db),
                                        pc.gain_margin_db));
    }
    return cmp;
}

StepSummary summarize_step(const TransferFunction& closed_loop, bool stable) {
    StepSummary summary;
    summary.samples = 20000;
    if (!stable) {
        summary.note = "closed loop is unstable; no step metrics";
        return summary;
    }
    for (double t_end = 0.05; t_end <= 60.0; t_end *= 4.0) {
        summary.t_end = t_end;
        try {
            summary.metrics = step_metrics(step_response(closed_loop, t_end, summary.samples), 1.0);
            summary.note = fmt::format("unit step over {:.4g} s", t_end);
            return summary;
        } catch (const NotSettled&) {
        }
    }
    summary.note = "step response did not settle within the longest window";
    return summary;
}

}  // namespace

DesignReport design_report(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                           const ConverterParams& p) {
    auto loop = compensated_loop(plant, g, cfg, p);
    auto margins = stability_margins(loop);
    auto plain = stability_margins(compensated_loop(plant, g, LoopConfig{}, p));
    auto hidden = stability_margins(compensated_loop(plant, g, LoopConfig{true, true}, p));
    auto closed = close_unity_loop(loop);
    auto cl_poles = poles(closed);
    const bool stable = std::all_of(cl_poles.begin(), cl_poles.end(), [](const auto& z) { return z.real() < 0.0; });

    DesignReport report{
        .params = p,
        .config = cfg,
        .gains = g,
        .loop = loop,
        .margins = margins,
        .margins_plain = plain,
        .margins_hidden_gains = hidden,
        .closed_loop = closed,
        .closed_loop_poles = cl_poles,
        .closed_loop_dc_gain = dc_gain(closed),
        .step = summarize_step(closed, stable),
        .published = std::nullopt,
    };
    if (auto pc = published_case_for(g)) {
        report.published = compare_with_published(*pc, plain);
    }
    return report;
}

}  // namespace buckforge
