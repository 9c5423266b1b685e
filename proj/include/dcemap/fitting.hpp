#pragma once

#include "dcemap/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dcemap {

/// One voxel's baseline-subtracted contrast curve. Times are seconds from the
/// first acquisition frame.
struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
};

/// Throws Error(InsufficientSamples) for fewer than 4 samples and
/// Error(InvalidArgument) for mismatched lengths, non-finite entries, negative
/// first time or non-increasing times.
void validate(const TimeSeries& series);

struct FitBounds {
    double y_max_lo = 0.0, y_max_hi = 0.0;
    double t_peak_lo = 0.0, t_peak_hi = 0.0;
    double alpha_lo = 0.0, alpha_hi = 0.0;

    bool contains(const GammaVariateParams& p) const {
        return p.y_max >= y_max_lo && p.y_max <= y_max_hi && p.t_peak >= t_peak_lo &&
               p.t_peak <= t_peak_hi && p.alpha >= alpha_lo && p.alpha <= alpha_hi;
    }
};

struct FitConfig {
    int max_iterations = 200;
    double sse_rel_tolerance = 1e-8;
    double step_tolerance = 1e-10;
    double alpha_cap = 1000.0;
    double initial_alpha = 3.0;
    double initial_damping = 1e-3;
    /// Series whose peak contrast is below this are reported as no-signal.
    double no_signal_floor_hu = 10.0;
    /// Half-widths of the amplitude and peak-time boxes around the data maximum.
    double y_max_band_hu = 40.0;
    double t_peak_band_s = 5.0;
    /// Smallest admissible t_peak lower bound.
    double t_peak_floor_s = 0.1;
    double arrival_fraction = kDefaultArrivalFraction;
};

/// Throws Error(InvalidArgument) when the config breaks its invariants.
void validate(const FitConfig& config);

/// Status codes double as the on-disk status map values.
enum class FitStatus : std::uint8_t {
    Converged = 0,
    Excluded = 1,
    NoSignal = 2,
    MaxIterations = 3,
    DegenerateShape = 4,
};

const char* to_string(FitStatus status) noexcept;

struct FitResult {
    std::optional<GammaVariateParams> params;
    DerivedParams derived;
    FitBounds bounds;
    double rmse = 0.0;
    double r_squared = 0.0;
    int iterations = 0;
    FitStatus status = FitStatus::NoSignal;
};

/// Box of admissible parameters: the data maximum +/- the amplitude band, the
/// time of the maximum +/- the time band (lower edge floored at
/// config.t_peak_floor_s), alpha in [0, alpha_cap].
FitBounds derive_bounds(const TimeSeries& series, const FitConfig& config = {});

GammaVariateParams initial_guess(const TimeSeries& series, const FitBounds& bounds,
                                 const FitConfig& config = {});

/// Bounded Levenberg-Marquardt fit of the gamma-variate curve to `series`.
FitResult fit_series(const TimeSeries& series, const FitConfig& config = {});

/// As above, additionally recording the SSE at the start point and after every
/// accepted iteration.
FitResult fit_series(const TimeSeries& series, const FitConfig& config,
                     std::vector<double>* sse_history);

struct Goodness {
    double rmse = 0.0;
    double r_squared = 0.0;
};

Goodness goodness(const TimeSeries& series, const GammaVariateParams& params);

}  // namespace dcemap
