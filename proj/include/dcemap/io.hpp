#pragma once

#include "dcemap/nifti.hpp"
#include "dcemap/phantom.hpp"
#include "dcemap/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dcemap::io {

namespace fs = std::filesystem;

inline constexpr const char* kSoftwareName = "dcemap";
inline constexpr const char* kSoftwareVersion = "1.0.0";

/// JSON sidecar: {"frame_times_s": [...], "heart_rate_bpm": 60, "description": "..."}.
struct TimesSidecar {
    std::vector<double> frame_times_s;
    std::optional<double> heart_rate_bpm;
    std::string description;
};

TimesSidecar read_times(const fs::path& path);
void write_times(const fs::path& path, const TimesSidecar& sidecar);

/// 4D NIfTI plus timing sidecar. Throws Error(TimingMismatch) when the frame
/// counts disagree.
VolumeSeries read_volume_series(const fs::path& image, const fs::path& times);
void write_volume_series(const VolumeSeries& series, const fs::path& image, const fs::path& times,
                         const std::string& description = {});

ScalarVolume read_scalar_volume(const fs::path& path);
void write_scalar_volume(const ScalarVolume& volume, const fs::path& path);

/// Any nonzero voxel is selected.
RoiMask read_mask(const fs::path& path);
void write_mask(const RoiMask& mask, const fs::path& path);

/// Voxels whose centres lie within radius_mm of center_mm.
RoiMask sphere_mask(Dims dims, Spacing spacing, Point3 center_mm, double radius_mm);

/// JSON plane file: {"origin_mm", "axis_u", "axis_v", "size": [nu, nv], "sample_spacing_mm"}.
PlaneSpec read_plane(const fs::path& path);
void write_plane(const fs::path& path, const PlaneSpec& plane);

struct PhantomDocument {
    PhantomSpec spec;
    SamplingSchedule schedule;
};

/// JSON phantom description; see README for the schema.
PhantomDocument parse_phantom(const std::string& json_text);
PhantomDocument read_phantom(const fs::path& path);

/// Everything needed to reproduce a `fit` run, written next to the maps.
struct RunManifest {
    PipelineOptions options;
    std::optional<double> baseline_hu;
    std::string aorta_roi;
    std::vector<std::string> inputs;
    std::string created_utc;
};

/// Map file names, in write order (scalar maps then status).
const std::vector<std::string>& map_file_names();

/// Writes <stem>.nii for every scalar map (float32), status.nii (uint8) and,
/// when given, manifest.json. Throws Error(IoFailure) if out_dir is unusable.
void write_maps(const ParameterMaps& maps, const fs::path& out_dir,
                const std::optional<RunManifest>& manifest = std::nullopt);
ParameterMaps read_maps(const fs::path& dir);

std::string manifest_json(const RunManifest& manifest);

/// Linear window to 8 bits: lo -> 0, hi -> 255, rounded half up, clamped;
/// NaN -> 0.
std::uint8_t window_gray(double value, double lo, double hi);

void write_pgm(const fs::path& path, const SliceImage& image, double lo, double hi);
void write_csv(const fs::path& path, const SliceImage& image);

/// Shortest round-trip decimal for v ("nan", "inf", "-inf" for non-finite).
std::string format_double(double v);

/// Resamples a map on a plane and writes the windowed PGM and raw CSV.
SliceImage export_slice(const fs::path& map_file, const fs::path& plane_file,
                        const fs::path& out_pgm, const fs::path& out_csv, double lo, double hi);

void write_study_csv(const fs::path& path, const std::vector<StudyRow>& rows);

}  // namespace dcemap::io
