#include "dcemap/pipeline.hpp"

#include "dcemap/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace dcemap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void validate(const VolumeSeries& s) {
    if (s.dims.nx == 0 || s.dims.ny == 0 || s.dims.nz == 0) {
        throw Error(ErrorCode::InvalidArgument, "volume dims must be positive");
    }
    if (!(s.spacing.sx > 0.0 && s.spacing.sy > 0.0 && s.spacing.sz > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "voxel spacing must be positive");
    }
    if (s.frame_times.size() < 4) {
        throw Error(ErrorCode::InsufficientSamples, "a volume series needs at least 4 frames");
    }
    for (std::size_t i = 0; i < s.frame_times.size(); ++i) {
        if (!std::isfinite(s.frame_times[i]) ||
            (i > 0 && !(s.frame_times[i] > s.frame_times[i - 1]))) {
            throw Error(ErrorCode::InvalidArgument, "frame times must be strictly increasing");
        }
    }
    if (s.data.size() != s.frames() * s.dims.voxels()) {
        throw Error(ErrorCode::InvalidArgument, "data length does not match dims x frames");
    }
}

ParameterMaps::ParameterMaps(Dims dims, Spacing spacing)
    : y_max(dims, spacing, kNaN),
      t_peak(dims, spacing, kNaN),
      alpha(dims, spacing, kNaN),
      t01(dims, spacing, kNaN),
      rt(dims, spacing, kNaN),
      rmse(dims, spacing, kNaN),
      r_squared(dims, spacing, kNaN),
      status(dims, spacing, static_cast<std::uint8_t>(FitStatus::Excluded)) {}

std::vector<std::pair<std::string, const ScalarVolume*>> ParameterMaps::scalar_maps() const {
    return {{"y_max", &y_max}, {"t_peak", &t_peak}, {"alpha", &alpha}, {"t01", &t01},
            {"rt", &rt},       {"rmse", &rmse},     {"r2", &r_squared}};
}

std::vector<std::pair<std::string, ScalarVolume*>> ParameterMaps::scalar_maps() {
    return {{"y_max", &y_max}, {"t_peak", &t_peak}, {"alpha", &alpha}, {"t01", &t01},
            {"rt", &rt},       {"rmse", &rmse},     {"r2", &r_squared}};
}

void ParameterMaps::store(std::size_t i, const FitResult& fit) {
    status[i] = static_cast<std::uint8_t>(fit.status);
    if (!fit.params) {
        for (auto& [name, map] : scalar_maps()) {
            (*map)[i] = kNaN;
        }
        return;
    }
    y_max[i] = fit.params->y_max;
    t_peak[i] = fit.params->t_peak;
    alpha[i] = fit.params->alpha;
    // A flat curve reaches any fraction of its peak immediately.
    t01[i] = fit.derived.t01.value_or(0.0);
    rt[i] = fit.derived.rt;
    rmse[i] = fit.rmse;
    r_squared[i] = fit.r_squared;
}

BaselineEstimate compute_baseline(const VolumeSeries& series, const RoiMask& roi) {
    validate(series);
    if (roi.dims != series.dims) {
        throw Error(ErrorCode::ShapeMismatch, "aorta ROI dims differ from the series");
    }
    if (series.frames() < 3) {
        throw Error(ErrorCode::InsufficientFrames);
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < roi.data.size(); ++v) {
        if (!roi[v]) {
            continue;
        }
        for (std::size_t f = 0; f < 3; ++f) {
            sum += series.at(f, v);
            ++count;
        }
    }
    if (count == 0) {
        throw Error(ErrorCode::EmptyRoi);
    }
    return {sum / static_cast<double>(count)};
}

VolumeSeries subtract_baseline(VolumeSeries series, const BaselineEstimate& baseline) {
    if (!std::isfinite(baseline.y_b)) {
        throw Error(ErrorCode::InvalidArgument, "baseline must be finite");
    }
    for (double& v : series.data) {
        v -= baseline.y_b;
    }
    return series;
}

RoiMask exclusion_mask(const VolumeSeries& contrast, double threshold_hu) {
    validate(contrast);
    const std::size_t n = contrast.dims.voxels();
    std::vector<double> sums(n, 0.0);
    for (std::size_t f = 0; f < contrast.frames(); ++f) {
        const double* frame = contrast.data.data() + contrast.frame_offset(f);
        for (std::size_t v = 0; v < n; ++v) {
            sums[v] += frame[v];
        }
    }
    RoiMask mask(contrast.dims, contrast.spacing, 0);
    for (std::size_t v = 0; v < n; ++v) {
        mask[v] = sums[v] >= threshold_hu ? 1 : 0;
    }
    return mask;
}

ParameterMaps fit_volume(const VolumeSeries& contrast, const RoiMask& mask,
                         const FitConfig& config, unsigned workers) {
    validate(contrast);
    validate(config);
    if (mask.dims != contrast.dims) {
        throw Error(ErrorCode::ShapeMismatch, "mask dims differ from the series");
    }
    ParameterMaps maps(contrast.dims, contrast.spacing);

    std::vector<std::size_t> selected;
    for (std::size_t v = 0; v < mask.data.size(); ++v) {
        if (mask[v]) {
            selected.push_back(v);
        }
    }

    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    constexpr std::size_t kChunk = 256;
    std::atomic<std::size_t> next{0};

    // Each voxel's fit reads only its own series and writes only its own map
    // entries, so the output is independent of how chunks are scheduled.
    auto work = [&] {
        TimeSeries series;
        series.times = contrast.frame_times;
        series.values.resize(contrast.frames());
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= selected.size()) {
                return;
            }
            const std::size_t end = std::min(begin + kChunk, selected.size());
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t v = selected[k];
                for (std::size_t f = 0; f < contrast.frames(); ++f) {
                    series.values[f] = contrast.at(f, v);
                }
                maps.store(v, fit_series(series, config));
            }
        }
    };

    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, selected.size() / kChunk + 1)));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) {
            pool.emplace_back(work);
        }
    }
    return maps;
}

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages{"read",          "subtract_baseline",
                                                 "gaussian_smooth", "exclusion_mask",
                                                 "fit_volume",    "write_maps"};
    return stages;
}

PipelineResult run_pipeline(const VolumeSeries& series, const RoiMask& aorta_roi,
                            const PipelineOptions& options) {
    PipelineResult out;
    out.baseline = compute_baseline(series, aorta_roi);
    VolumeSeries contrast = subtract_baseline(series, out.baseline);
    contrast = gaussian_smooth(std::move(contrast), options.sigma_mm);
    out.mask = exclusion_mask(contrast, options.threshold_hu);
    out.maps = fit_volume(contrast, out.mask, options.fit, options.workers);
    return out;
}

}  // namespace dcemap
