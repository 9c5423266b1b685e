#pragma once

#include <array>
#include <optional>

namespace dcemap {

/// The three shape parameters of the gamma-variate bolus curve
///   m(t) = y_max * (t / t_peak)^alpha * exp(alpha * (1 - t / t_peak)),
/// which peaks at t = t_peak with value y_max and onsets at t = 0.
struct GammaVariateParams {
    double y_max = 0.0;   // HU
    double t_peak = 1.0;  // s
    double alpha = 0.0;

    friend bool operator==(const GammaVariateParams&, const GammaVariateParams&) = default;
};

/// Below this shape exponent the curve is treated as flat and RT diverges.
inline constexpr double kDegenerateAlpha = 1e-6;
inline constexpr double kDefaultArrivalFraction = 0.01;

/// Flow parameters derived from a fitted curve. `t01` is empty when it was
/// not computed; `rt` is +inf for degenerate shapes.
struct DerivedParams {
    std::optional<double> t01;
    double rt = 0.0;
};

/// ln(u) + 1 - u for u = t / t_peak, accurate near the peak and for u -> 0.
/// m(t) = y_max * exp(alpha * shape_log_term(t, t_peak)) for t > 0.
double shape_log_term(double t, double t_peak);

/// Throws Error(InvalidArgument) unless all fields are finite, t_peak > 0 and alpha >= 0.
void validate(const GammaVariateParams& params);

double eval_model(const GammaVariateParams& params, double t);

/// Partial derivatives of m(t) with respect to (y_max, t_peak, alpha).
using ModelGradient = std::array<double, 3>;

/// Requires t > 0 and alpha > 0; throws Error(GradientUndefined) otherwise.
ModelGradient eval_gradient(const GammaVariateParams& params, double t);

/// Closed-form first moment t_peak * (alpha + 1) / alpha. Returns +inf when
/// alpha <= kDegenerateAlpha.
double residence_time(const GammaVariateParams& params);

/// Ratio of the two moment integrals over [0, t_upper] by composite Simpson
/// quadrature on n_points nodes. Validation oracle for residence_time().
/// Throws Error(TruncationTooCoarse) when the neglected tail exceeds 1e-9 of
/// either integral.
double residence_time_quadrature(const GammaVariateParams& params, double t_upper, int n_points);

/// Rising-edge time at which m(t) = fraction * y_max.
double arrival_time_t01(const GammaVariateParams& params, double fraction = kDefaultArrivalFraction);

/// Both derived parameters; t01 is left empty and rt = +inf for degenerate alpha.
DerivedParams derive_params(const GammaVariateParams& params,
                            double fraction = kDefaultArrivalFraction);

}  // namespace dcemap
