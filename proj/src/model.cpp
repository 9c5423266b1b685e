#include "dcemap/model.hpp"

#include "dcemap/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcemap {


double shape_log_term(double t, double t_peak) {
    const double u = t / t_peak;
    const double d = (t - t_peak) / t_peak;
    // log1p keeps the neighbourhood of the peak free of cancellation but
    // loses u itself once u falls below machine epsilon.
    return std::abs(d) < 0.5 ? std::log1p(d) - d : std::log(u) - d;
}

void validate(const GammaVariateParams& p) {
    if (!std::isfinite(p.y_max) || !std::isfinite(p.t_peak) || !std::isfinite(p.alpha)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite gamma-variate parameter");
    }
    if (p.t_peak <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "t_peak must be positive");
    }
    if (p.alpha < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
    }
}

double eval_model(const GammaVariateParams& p, double t) {
    validate(p);
    if (!std::isfinite(t) || t < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "time must be finite and non-negative");
    }
    if (t == 0.0) {
        return p.alpha > 0.0 ? 0.0 : p.y_max;
    }
    return p.y_max * std::exp(p.alpha * shape_log_term(t, p.t_peak));
}

ModelGradient eval_gradient(const GammaVariateParams& p, double t) {
    validate(p);
    if (!std::isfinite(t)) {
        throw Error(ErrorCode::InvalidArgument, "time must be finite");
    }
    if (t <= 0.0 || p.alpha <= 0.0) {
        throw Error(ErrorCode::GradientUndefined);
    }
    const double log_term = shape_log_term(t, p.t_peak);
    const double shape = std::exp(p.alpha * log_term);
    const double m = p.y_max * shape;
    return {shape, m * p.alpha * (t - p.t_peak) / (p.t_peak * p.t_peak), m * log_term};
}

double residence_time(const GammaVariateParams& p) {
    validate(p);
    if (p.alpha <= kDegenerateAlpha) {
        return std::numeric_limits<double>::infinity();
    }
    return p.t_peak * (p.alpha + 1.0) / p.alpha;
}

double residence_time_quadrature(const GammaVariateParams& p, double t_upper, int n_points) {
    validate(p);
    if (p.alpha <= 0.0 || !std::isfinite(t_upper) || t_upper <= 0.0 || n_points < 1000) {
        throw Error(ErrorCode::InvalidArgument, "quadrature needs alpha > 0, t_upper > 0, n >= 1000");
    }
    // The amplitude cancels in the ratio, so integrate the unit curve.
    const double alpha = p.alpha;
    const double tp = p.t_peak;
    auto shape = [&](double t) { return t > 0.0 ? std::exp(alpha * shape_log_term(t, tp)) : 0.0; };

    // t = t_upper * s^q smooths the t^alpha onset so Simpson keeps its order.
    const double q = std::max(1.0, 5.0 / (alpha + 1.0));
    const int intervals = (n_points - 1) % 2 == 0 ? n_points - 1 : n_points - 2;
    const double h = 1.0 / intervals;
    double area = 0.0;
    double moment = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double s = i * h;
        const double t = t_upper * std::pow(s, q);
        const double jac = s > 0.0 ? t_upper * q * std::pow(s, q - 1.0) : 0.0;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double g = shape(t) * jac;
        area += w * g;
        moment += w * t * g;
    }
    area *= h / 3.0;
    moment *= h / 3.0;

    // Both integrands are log-concave past their maxima, so the tail beyond
    // t_upper is bounded by value / |log-slope| at t_upper.
    const double slope_area = alpha / t_upper - alpha / tp;
    const double slope_moment = (alpha + 1.0) / t_upper - alpha / tp;
    if (slope_area >= 0.0 || slope_moment >= 0.0) {
        throw Error(ErrorCode::TruncationTooCoarse, "t_upper precedes the decaying tail");
    }
    const double g_end = shape(t_upper);
    const double tail_area = g_end / -slope_area;
    const double tail_moment = t_upper * g_end / -slope_moment;
    if (!(area > 0.0) || tail_area > 1e-9 * area || tail_moment > 1e-9 * moment) {
        throw Error(ErrorCode::TruncationTooCoarse);
    }
    return moment / area;
}

double arrival_time_t01(const GammaVariateParams& p, double fraction) {
    validate(p);
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1)");
    }
    if (p.alpha == 0.0) {
        throw Error(ErrorCode::ConstantCurve);
    }
    // Solve v - expm1(v) = ln(fraction) / alpha for v = ln(t / t_peak) < 0.
    // The left side is strictly increasing on (-inf, 0); it is below target at
    // target - 1 and above it at 0.
    const double target = std::log(fraction) / p.alpha;
    auto residual = [&](double v) { return v - std::expm1(v) - target; };
    double lo = target - 1.0;
    double hi = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (residual(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return p.t_peak * std::exp(0.5 * (lo + hi));
}

DerivedParams derive_params(const GammaVariateParams& p, double fraction) {
    DerivedParams out;
    out.rt = residence_time(p);
    if (p.alpha > kDegenerateAlpha) {
        out.t01 = arrival_time_t01(p, fraction);
    }
    return out;
}

}  // namespace dcemap
