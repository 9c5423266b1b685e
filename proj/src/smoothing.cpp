#include "dcemap/pipeline.hpp"

#include "dcemap/error.hpp"

#include <algorithm>
#include <cmath>

namespace dcemap {

namespace {

// Convolves every line of `frame` running along the axis with the given
// element stride, clamping reads at the ends (replicate padding).
void convolve_axis(double* frame, std::size_t length, std::size_t stride, std::size_t lines,
                   std::size_t line_step_inner, std::size_t inner_count,
                   std::size_t line_step_outer, const std::vector<double>& kernel) {
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(length);
    std::vector<double> line(length);
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t start =
            (l % inner_count) * line_step_inner + (l / inner_count) * line_step_outer;
        for (std::size_t i = 0; i < length; ++i) {
            line[i] = frame[start + i * stride];
        }
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, 0, n - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(j)];
            }
            frame[start + static_cast<std::size_t>(i) * stride] = acc;
        }
    }
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma_voxels) {
    if (!(sigma_voxels >= 0.0) || !std::isfinite(sigma_voxels)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be finite and non-negative");
    }
    if (sigma_voxels == 0.0) {
        return {1.0};
    }
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma_voxels));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double x = static_cast<double>(k) / sigma_voxels;
        const double w = std::exp(-0.5 * x * x);
        kernel[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) {
        w /= sum;
    }
    return kernel;
}

VolumeSeries gaussian_smooth(VolumeSeries series, double sigma_mm) {
    validate(series);
    if (!(sigma_mm >= 0.0) || !std::isfinite(sigma_mm)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_mm must be finite and non-negative");
    }
    if (sigma_mm == 0.0) {
        return series;
    }
    const auto [nx, ny, nz] = series.dims;
    const auto kx = gaussian_kernel(sigma_mm / series.spacing.sx);
    const auto ky = gaussian_kernel(sigma_mm / series.spacing.sy);
    const auto kz = gaussian_kernel(sigma_mm / series.spacing.sz);
    for (std::size_t f = 0; f < series.frames(); ++f) {
        double* frame = series.data.data() + series.frame_offset(f);
        if (nx > 1) {
            convolve_axis(frame, nx, 1, ny * nz, nx, ny * nz, 0, kx);
        }
        if (ny > 1) {
            convolve_axis(frame, ny, nx, nx * nz, 1, nx, nx * ny, ky);
        }
        if (nz > 1) {
            convolve_axis(frame, nz, nx * ny, nx * ny, 1, nx * ny, 0, kz);
        }
    }
    return series;
}

}  // namespace dcemap
