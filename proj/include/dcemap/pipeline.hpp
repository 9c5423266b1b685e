#pragma once

#include "dcemap/fitting.hpp"
#include "dcemap/volume.hpp"

#include <string>
#include <vector>

namespace dcemap {

struct BaselineEstimate {
    double y_b = 0.0;  // HU
};

/// Per-voxel fit outputs. Voxels without a fit hold NaN in every scalar map.
struct ParameterMaps {
    ScalarVolume y_max, t_peak, alpha, t01, rt, rmse, r_squared;
    Volume<std::uint8_t> status;

    ParameterMaps() = default;
    ParameterMaps(Dims dims, Spacing spacing);

    Dims dims() const { return status.dims; }

    /// Scalar maps paired with their on-disk stem, in a fixed order.
    std::vector<std::pair<std::string, const ScalarVolume*>> scalar_maps() const;
    std::vector<std::pair<std::string, ScalarVolume*>> scalar_maps();

    /// Writes a fit into voxel i. Non-fitted results become NaN everywhere.
    void store(std::size_t i, const FitResult& fit);
};

/// Oblique sampling plane: sample (i, j) lies at
/// origin + i * sample_spacing * axis_u + j * sample_spacing * axis_v (mm).
struct PlaneSpec {
    Point3 origin{};
    Point3 axis_u{1.0, 0.0, 0.0};
    Point3 axis_v{0.0, 1.0, 0.0};
    std::size_t nu = 1, nv = 1;
    double sample_spacing = 1.0;
};

/// Throws Error(InvalidArgument) unless the axes are orthonormal within 1e-9.
void validate(const PlaneSpec& plane);

/// Row-major nu x nv image: pixels[j * nu + i].
struct SliceImage {
    std::size_t nu = 0, nv = 0;
    std::vector<double> pixels;
};

/// Mean of the ROI voxels over the first three frames.
BaselineEstimate compute_baseline(const VolumeSeries& series, const RoiMask& aorta_roi);

VolumeSeries subtract_baseline(VolumeSeries series, const BaselineEstimate& baseline);

/// Separable per-frame Gaussian with physical sigma; truncated at 3 sigma,
/// renormalized, replicate-padded. sigma_mm = 0 returns the input unchanged.
VolumeSeries gaussian_smooth(VolumeSeries series, double sigma_mm);

/// Normalized 1-D kernel for a sigma given in voxels (radius ceil(3 sigma)).
std::vector<double> gaussian_kernel(double sigma_voxels);

inline constexpr double kDefaultThresholdHu = 100.0;
inline constexpr double kDefaultSigmaMm = 1.0;

/// Selects voxels whose contrast summed over time reaches threshold_hu.
RoiMask exclusion_mask(const VolumeSeries& contrast, double threshold_hu = kDefaultThresholdHu);

/// Fits every selected voxel. workers = 0 uses all hardware threads. The
/// result does not depend on the worker count.
ParameterMaps fit_volume(const VolumeSeries& contrast, const RoiMask& mask,
                         const FitConfig& config = {}, unsigned workers = 0);

/// Trilinear resampling of `volume` on `plane`. Samples outside the grid, or
/// whose interpolation weights touch a NaN voxel, are NaN.
SliceImage mpr_slice(const ScalarVolume& volume, const PlaneSpec& plane);

/// Options for the full read-to-maps chain.
struct PipelineOptions {
    double sigma_mm = kDefaultSigmaMm;
    double threshold_hu = kDefaultThresholdHu;
    FitConfig fit;
    unsigned workers = 0;
};

struct PipelineResult {
    BaselineEstimate baseline;
    RoiMask mask;
    ParameterMaps maps;
};

/// Stage names of the fit workflow (file read through map write), in order.
const std::vector<std::string>& pipeline_stages();

/// subtract_baseline -> gaussian_smooth -> exclusion_mask -> fit_volume.
PipelineResult run_pipeline(const VolumeSeries& series, const RoiMask& aorta_roi,
                            const PipelineOptions& options = {});

}  // namespace dcemap
