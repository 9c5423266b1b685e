#include "dcemap/phantom.hpp"

#include "dcemap/error.hpp"
#include "dcemap/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcemap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sphere_box_distance_sq(const Sphere& s, const Box& b) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double c = std::clamp(s.center[k], b.lo[k], b.hi[k]);
        d2 += (s.center[k] - c) * (s.center[k] - c);
    }
    return d2;
}

void validate_shape(const Shape& shape) {
    if (const auto* s = std::get_if<Sphere>(&shape)) {
        if (!(s->radius > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
        }
    } else {
        const auto& b = std::get<Box>(shape);
        for (int k = 0; k < 3; ++k) {
            if (!(b.hi[k] > b.lo[k])) {
                throw Error(ErrorCode::InvalidArgument, "box extent must be positive");
            }
        }
    }
}

}  // namespace

void validate(const SamplingSchedule& schedule) {
    const auto& t = schedule.frame_times;
    if (t.size() < 4) {
        throw Error(ErrorCode::InsufficientFrames, "a schedule needs at least 4 frames");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || t[i] < 0.0 || (i > 0 && !(t[i] > t[i - 1]))) {
            throw Error(ErrorCode::InvalidArgument, "frame times must be non-negative and increasing");
        }
    }
}

SamplingSchedule make_schedule(double heart_rate_bpm, int beats_per_frame, int n_dynamic_frames,
                               double late_frame_time) {
    if (!(heart_rate_bpm > 0.0) || !std::isfinite(heart_rate_bpm)) {
        throw Error(ErrorCode::InvalidArgument, "heart rate must be positive");
    }
    if (beats_per_frame < 1 || beats_per_frame > 3) {
        throw Error(ErrorCode::InvalidArgument, "beats per frame must be 1, 2 or 3");
    }
    if (n_dynamic_frames < 3) {
        throw Error(ErrorCode::InsufficientFrames, "need at least 3 dynamic frames");
    }
    const double step = beats_per_frame * 60.0 / heart_rate_bpm;
    SamplingSchedule s;
    s.frame_times.reserve(static_cast<std::size_t>(n_dynamic_frames) + 1);
    for (int i = 0; i < n_dynamic_frames; ++i) {
        s.frame_times.push_back(i * step);
    }
    if (!(late_frame_time > s.frame_times.back())) {
        throw Error(ErrorCode::ScheduleOverlap);
    }
    s.frame_times.push_back(late_frame_time);
    return s;
}

bool contains(const Shape& shape, const Point3& p) {
    if (const auto* s = std::get_if<Sphere>(&shape)) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            d2 += (p[k] - s->center[k]) * (p[k] - s->center[k]);
        }
        return d2 <= s->radius * s->radius;
    }
    const auto& b = std::get<Box>(shape);
    for (int k = 0; k < 3; ++k) {
        if (!(p[k] >= b.lo[k] && p[k] < b.hi[k])) {
            return false;
        }
    }
    return true;
}

bool intersects(const Shape& a, const Shape& b) {
    const auto* sa = std::get_if<Sphere>(&a);
    const auto* sb = std::get_if<Sphere>(&b);
    if (sa && sb) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            d2 += (sa->center[k] - sb->center[k]) * (sa->center[k] - sb->center[k]);
        }
        const double r = sa->radius + sb->radius;
        return d2 < r * r;
    }
    if (sa) {
        return sphere_box_distance_sq(*sa, std::get<Box>(b)) < sa->radius * sa->radius;
    }
    if (sb) {
        return sphere_box_distance_sq(*sb, std::get<Box>(a)) < sb->radius * sb->radius;
    }
    const auto& ba = std::get<Box>(a);
    const auto& bb = std::get<Box>(b);
    for (int k = 0; k < 3; ++k) {
        if (!(ba.lo[k] < bb.hi[k] && bb.lo[k] < ba.hi[k])) {
            return false;
        }
    }
    return true;
}

PhantomSpec::PhantomSpec(Dims dims, Spacing spacing, double background, double noise_sigma,
                         std::uint64_t seed)
    : dims_(dims), spacing_(spacing), background_(background), noise_sigma_(noise_sigma), seed_(seed) {
    if (dims.voxels() == 0) {
        throw Error(ErrorCode::InvalidArgument, "phantom dims must be positive");
    }
    if (!(spacing.sx > 0.0 && spacing.sy > 0.0 && spacing.sz > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "phantom spacing must be positive");
    }
    if (!std::isfinite(background)) {
        throw Error(ErrorCode::InvalidArgument, "background must be finite");
    }
    set_noise(noise_sigma, seed);
}

void PhantomSpec::set_noise(double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
    }
    noise_sigma_ = sigma;
    seed_ = seed;
}

void PhantomSpec::add_region(PhantomRegion region) {
    validate(region.truth);
    validate_shape(region.shape);
    if (!std::isfinite(region.onset_shift) || region.onset_shift < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "onset shift must be non-negative");
    }
    for (const auto& existing : regions_) {
        if (intersects(existing.shape, region.shape)) {
            throw Error(ErrorCode::OverlappingRegions,
                        "'" + region.name + "' intersects '" + existing.name + "'");
        }
    }
    regions_.push_back(std::move(region));
}

std::vector<int> region_labels(const PhantomSpec& spec) {
    const Dims& d = spec.dims();
    std::vector<int> labels(d.voxels(), -1);
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                const Point3 p = voxel_center(spec.spacing(), x, y, z);
                for (std::size_t r = 0; r < spec.regions().size(); ++r) {
                    if (contains(spec.regions()[r].shape, p)) {
                        labels[d.index(x, y, z)] = static_cast<int>(r);
                        break;
                    }
                }
            }
        }
    }
    return labels;
}

PhantomVolumes synthesize(const PhantomSpec& spec, const SamplingSchedule& schedule) {
    validate(schedule);
    const Dims& d = spec.dims();
    const std::size_t n_frames = schedule.frame_times.size();
    const auto labels = region_labels(spec);
    const auto& regions = spec.regions();

    // Region curves are shared by all voxels of a region.
    std::vector<std::vector<double>> curves(regions.size(), std::vector<double>(n_frames));
    for (std::size_t r = 0; r < regions.size(); ++r) {
        for (std::size_t f = 0; f < n_frames; ++f) {
            const double t = schedule.frame_times[f] - regions[r].onset_shift;
            curves[r][f] = t < 0.0 ? 0.0 : eval_model(regions[r].truth, t);
        }
    }

    PhantomVolumes out;
    out.series.dims = d;
    out.series.spacing = spec.spacing();
    out.series.frame_times = schedule.frame_times;
    out.series.data.assign(n_frames * d.voxels(), spec.background());
    out.truth = ParameterMaps(d, spec.spacing());

    std::vector<DerivedParams> derived;
    for (const auto& region : regions) {
        derived.push_back(derive_params(region.truth));
    }
    for (std::size_t v = 0; v < d.voxels(); ++v) {
        const int label = labels[v];
        if (label < 0) {
            continue;
        }
        const auto r = static_cast<std::size_t>(label);
        for (std::size_t f = 0; f < n_frames; ++f) {
            out.series.data[out.series.frame_offset(f) + v] = curves[r][f];
        }
        FitResult truth;
        truth.params = regions[r].truth;
        truth.derived = derived[r];
        truth.rmse = 0.0;
        truth.r_squared = 1.0;
        truth.status = regions[r].truth.alpha > kDegenerateAlpha ? FitStatus::Converged
                                                                 : FitStatus::DegenerateShape;
        out.truth.store(v, truth);
    }

    if (spec.noise_sigma() > 0.0) {
        out.series = add_noise(std::move(out.series), spec.noise_sigma(), spec.seed());
    }
    return out;
}

VolumeSeries add_noise(VolumeSeries series, double sigma_hu, std::uint64_t seed) {
    if (!(sigma_hu >= 0.0) || !std::isfinite(sigma_hu)) {
        throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
    }
    if (sigma_hu == 0.0) {
        return series;
    }
    const CounterRng rng(seed);
    for (std::size_t k = 0; k < series.data.size(); ++k) {
        series.data[k] += sigma_hu * rng.normal(k);
    }
    return series;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        return kNaN;
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

const ParameterErrors& RecoveryStats::get(const std::string& name) const {
    for (const auto& p : parameters) {
        if (p.parameter == name) {
            return p;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + name + "'");
}

RecoveryStats recovery_error(const ParameterMaps& fitted, const ParameterMaps& truth) {
    if (fitted.dims() != truth.dims()) {
        throw Error(ErrorCode::ShapeMismatch, "fitted and truth maps differ in dims");
    }
    const std::pair<const char*, const ScalarVolume ParameterMaps::*> fields[] = {
        {"y_max", &ParameterMaps::y_max},
        {"t_peak", &ParameterMaps::t_peak},
        {"alpha", &ParameterMaps::alpha},
        {"t01", &ParameterMaps::t01},
        {"rt", &ParameterMaps::rt},
    };
    const auto converged = static_cast<std::uint8_t>(FitStatus::Converged);

    RecoveryStats stats;
    for (const auto& [name, member] : fields) {
        ParameterErrors errors;
        errors.parameter = name;
        const ScalarVolume& f = fitted.*member;
        const ScalarVolume& t = truth.*member;
        std::vector<double> magnitudes;
        for (std::size_t v = 0; v < fitted.status.data.size(); ++v) {
            if (fitted.status[v] != converged || truth.status[v] != converged) {
                continue;
            }
            const double e = f[v] - t[v];
            errors.signed_error.push_back(e);
            magnitudes.push_back(std::abs(e));
            errors.abs_rel_error.push_back(t[v] != 0.0 ? std::abs(e) / std::abs(t[v]) : std::abs(e));
        }
        stats.voxels = errors.signed_error.size();
        errors.abs_summary = {quantile(magnitudes, 0.5), quantile(magnitudes, 0.9),
                              quantile(magnitudes, 1.0)};
        errors.rel_summary = {quantile(errors.abs_rel_error, 0.5),
                              quantile(errors.abs_rel_error, 0.9),
                              quantile(errors.abs_rel_error, 1.0)};
        stats.parameters.push_back(std::move(errors));
    }
    return stats;
}

}  // namespace dcemap
