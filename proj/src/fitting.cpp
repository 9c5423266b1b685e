#include "dcemap/fitting.hpp"

#include "dcemap/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iterator>

namespace dcemap {

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 to_vec(const GammaVariateParams& p) { return {p.y_max, p.t_peak, p.alpha}; }

GammaVariateParams to_params(const Vec3& v) { return {v[0], v[1], v[2]}; }

// Unit-amplitude curve and its log-term. Unlike eval_model this accepts the
// alpha = 0 bound edge and the t = 0 onset without throwing.
struct ShapeSample {
    double shape;
    double log_term;
};

ShapeSample shape_at(const Vec3& p, double t) {
    if (t <= 0.0) {
        return {p[2] > 0.0 ? 0.0 : 1.0, 0.0};
    }
    const double log_term = shape_log_term(t, p[1]);
    return {std::exp(p[2] * log_term), log_term};
}

double sum_squared_residuals(const TimeSeries& s, const Vec3& p) {
    double sse = 0.0;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double r = s.values[i] - p[0] * shape_at(p, s.times[i]).shape;
        sse += r * r;
    }
    return sse;
}

// Accumulates the normal equations J^T J and J^T r at p.
void normal_equations(const TimeSeries& s, const Vec3& p, Eigen::Matrix3d& jtj, Vec3& jtr) {
    jtj.setZero();
    jtr.setZero();
    const double tp2 = p[1] * p[1];
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double t = s.times[i];
        const ShapeSample ss = shape_at(p, t);
        const double m = p[0] * ss.shape;
        Vec3 row;
        if (t <= 0.0) {
            row = {ss.shape, 0.0, 0.0};
        } else {
            row = {ss.shape, m * p[2] * (t - p[1]) / tp2, m * ss.log_term};
        }
        const double r = s.values[i] - m;
        jtj.noalias() += row * row.transpose();
        jtr.noalias() += row * r;
    }
}

Vec3 project(const Vec3& v, const FitBounds& b) {
    return {std::clamp(v[0], b.y_max_lo, b.y_max_hi), std::clamp(v[1], b.t_peak_lo, b.t_peak_hi),
            std::clamp(v[2], b.alpha_lo, b.alpha_hi)};
}

double clip_inward(double x, double lo, double hi) {
    x = std::clamp(x, lo, hi);
    const double nudge = 1e-6 * (hi - lo);
    if (nudge > 0.0) {
        x = std::clamp(x, lo + nudge, hi - nudge);
    }
    return x;
}

std::size_t argmax_index(const std::vector<double>& values) {
    return static_cast<std::size_t>(
        std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

}  // namespace

void validate(const TimeSeries& s) {
    if (s.times.size() != s.values.size()) {
        throw Error(ErrorCode::InvalidArgument, "times and values differ in length");
    }
    if (s.times.size() < 4) {
        throw Error(ErrorCode::InsufficientSamples);
    }
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (!std::isfinite(s.times[i]) || !std::isfinite(s.values[i])) {
            throw Error(ErrorCode::InvalidArgument, "non-finite sample");
        }
        if (i > 0 && !(s.times[i] > s.times[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "times must be strictly increasing");
        }
    }
    if (s.times.front() < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "first time must be non-negative");
    }
}

void validate(const FitConfig& c) {
    const bool ok = c.max_iterations >= 1 && c.sse_rel_tolerance > 0.0 && c.step_tolerance > 0.0 &&
                    c.initial_alpha > 0.0 && c.alpha_cap > c.initial_alpha &&
                    c.initial_damping > 0.0 && c.y_max_band_hu >= 0.0 && c.t_peak_band_s >= 0.0 &&
                    c.t_peak_floor_s > 0.0 && c.arrival_fraction > 0.0 && c.arrival_fraction < 1.0;
    if (!ok) {
        throw Error(ErrorCode::InvalidArgument, "fit configuration out of range");
    }
}

const char* to_string(FitStatus status) noexcept {
    switch (status) {
        case FitStatus::Converged: return "converged";
        case FitStatus::Excluded: return "excluded";
        case FitStatus::NoSignal: return "no-signal";
        case FitStatus::MaxIterations: return "max-iterations";
        case FitStatus::DegenerateShape: return "degenerate-shape";
    }
    return "unknown";
}

FitBounds derive_bounds(const TimeSeries& series, const FitConfig& config) {
    validate(series);
    const std::size_t peak = argmax_index(series.values);
    const double peak_value = series.values[peak];
    const double peak_time = series.times[peak];

    FitBounds b;
    b.y_max_lo = peak_value - config.y_max_band_hu;
    b.y_max_hi = peak_value + config.y_max_band_hu;
    b.t_peak_lo = std::max(config.t_peak_floor_s, peak_time - config.t_peak_band_s);
    b.t_peak_hi = std::max(b.t_peak_lo, peak_time + config.t_peak_band_s);
    b.alpha_lo = 0.0;
    b.alpha_hi = config.alpha_cap;
    return b;
}

GammaVariateParams initial_guess(const TimeSeries& series, const FitBounds& bounds,
                                 const FitConfig& config) {
    validate(series);
    const std::size_t peak = argmax_index(series.values);
    return {clip_inward(series.values[peak], bounds.y_max_lo, bounds.y_max_hi),
            clip_inward(series.times[peak], bounds.t_peak_lo, bounds.t_peak_hi),
            clip_inward(config.initial_alpha, bounds.alpha_lo, bounds.alpha_hi)};
}

Goodness goodness(const TimeSeries& series, const GammaVariateParams& params) {
    validate(series);
    validate(params);
    const auto n = static_cast<double>(series.values.size());
    double mean = 0.0;
    for (double v : series.values) {
        mean += v;
    }
    mean /= n;
    double ss_tot = 0.0;
    for (double v : series.values) {
        ss_tot += (v - mean) * (v - mean);
    }
    const double sse = sum_squared_residuals(series, to_vec(params));
    Goodness g;
    g.rmse = std::sqrt(sse / n);
    g.r_squared = ss_tot > 0.0 ? 1.0 - sse / ss_tot : 0.0;
    return g;
}

FitResult fit_series(const TimeSeries& series, const FitConfig& config,
                     std::vector<double>* sse_history) {
    validate(series);
    validate(config);

    FitResult result;
    result.bounds = derive_bounds(series, config);
    const double peak_value = series.values[argmax_index(series.values)];
    if (peak_value < config.no_signal_floor_hu) {
        result.status = FitStatus::NoSignal;
        return result;
    }

    const FitBounds& bounds = result.bounds;
    Vec3 p = to_vec(initial_guess(series, bounds, config));
    double sse = sum_squared_residuals(series, p);
    if (sse_history) {
        sse_history->assign(1, sse);
    }

    Eigen::Matrix3d jtj;
    Vec3 jtr;
    normal_equations(series, p, jtj, jtr);
    double lambda = config.initial_damping;
    bool converged = false;
    int iterations = 0;

    while (iterations < config.max_iterations) {
        ++iterations;
        // Marquardt scaling, floored so a vanishing column cannot make the
        // damped system singular.
        const double floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
        Eigen::Matrix3d damped = jtj;
        Vec3 rhs = jtr;
        for (int k = 0; k < 3; ++k) {
            damped(k, k) += lambda * std::max(jtj(k, k), floor);
        }
        // A parameter sitting on a bound whose descent direction points out
        // of the box is held fixed; the step is solved over the rest.
        const Vec3 lo{bounds.y_max_lo, bounds.t_peak_lo, bounds.alpha_lo};
        const Vec3 hi{bounds.y_max_hi, bounds.t_peak_hi, bounds.alpha_hi};
        for (int k = 0; k < 3; ++k) {
            const bool pinned = (p[k] <= lo[k] && jtr[k] <= 0.0) || (p[k] >= hi[k] && jtr[k] >= 0.0);
            if (pinned) {
                damped.row(k).setZero();
                damped.col(k).setZero();
                damped(k, k) = 1.0;
                rhs[k] = 0.0;
            }
        }
        const Vec3 delta = damped.ldlt().solve(rhs);
        if (!delta.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        const Vec3 trial = project(p + delta, bounds);
        const double step = (trial - p).norm();
        if (step <= config.step_tolerance * (p.norm() + config.step_tolerance)) {
            converged = true;
            break;
        }
        const double trial_sse = sum_squared_residuals(series, trial);
        if (trial_sse < sse) {
            const double rel_decrease = (sse - trial_sse) / sse;
            p = trial;
            sse = trial_sse;
            if (sse_history) {
                sse_history->push_back(sse);
            }
            lambda = std::max(lambda / 10.0, 1e-15);
            if (rel_decrease < config.sse_rel_tolerance || sse == 0.0) {
                converged = true;
                break;
            }
            normal_equations(series, p, jtj, jtr);
        } else {
            lambda *= 10.0;
        }
    }

    const GammaVariateParams params = to_params(p);
    result.params = params;
    result.iterations = iterations;
    result.derived = derive_params(params, config.arrival_fraction);
    const Goodness g = goodness(series, params);
    result.rmse = g.rmse;
    result.r_squared = g.r_squared;
    if (params.alpha <= kDegenerateAlpha) {
        result.status = FitStatus::DegenerateShape;
    } else {
        result.status = converged ? FitStatus::Converged : FitStatus::MaxIterations;
    }
    return result;
}

FitResult fit_series(const TimeSeries& series, const FitConfig& config) {
    return fit_series(series, config, nullptr);
}

}  // namespace dcemap
