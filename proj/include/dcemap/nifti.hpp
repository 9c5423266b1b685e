#pragma once

#include "dcemap/volume.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dcemap::nifti {

/// NIFTI_TYPE_* codes this reader understands.
enum class DataType : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Float32 = 16,
    Float64 = 64,
};

/// Single-file (.nii) little-endian NIfTI-1 image of up to four dimensions.
/// Values are held already scaled (slope * raw + intercept) as doubles.
struct Image {
    std::array<std::size_t, 4> dims{1, 1, 1, 1};  // nx, ny, nz, nt
    Spacing spacing;
    double time_step = 0.0;  // pixdim[4]; informational only
    DataType stored_type = DataType::Float32;
    std::vector<double> data;

    std::size_t frames() const { return dims[3]; }
    std::size_t voxels_per_frame() const { return dims[0] * dims[1] * dims[2]; }
};

struct WriteOptions {
    DataType type = DataType::Float32;
    /// Only used for integer payloads: raw = round((value - intercept) / slope).
    double slope = 1.0;
    double intercept = 0.0;
    std::string description;
};

/// Throws Error(BadVolumeFile) for anything malformed and Error(IoFailure)
/// when the file cannot be opened.
Image read(const std::filesystem::path& path);

void write(const std::filesystem::path& path, const Image& image, const WriteOptions& options = {});

}  // namespace dcemap::nifti
