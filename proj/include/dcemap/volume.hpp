#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dcemap {

struct Dims {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t voxels() const { return nx * ny * nz; }
    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return (z * ny + y) * nx + x;
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Voxel size in mm along x, y, z.
struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

using Point3 = std::array<double, 3>;

/// Centre of voxel (x, y, z) in mm; voxel (0, 0, 0) sits at the origin.
inline Point3 voxel_center(const Spacing& s, std::size_t x, std::size_t y, std::size_t z) {
    return {static_cast<double>(x) * s.sx, static_cast<double>(y) * s.sy,
            static_cast<double>(z) * s.sz};
}

/// Registered 4D acquisition. Samples are stored frame-major with x fastest,
/// i.e. data[((frame * nz + z) * ny + y) * nx + x].
struct VolumeSeries {
    Dims dims;
    Spacing spacing;
    std::vector<double> frame_times;
    std::vector<double> data;

    std::size_t frames() const { return frame_times.size(); }
    std::size_t frame_offset(std::size_t frame) const { return frame * dims.voxels(); }
    double at(std::size_t frame, std::size_t voxel) const {
        return data[frame_offset(frame) + voxel];
    }
};

/// Throws Error(InvalidArgument) unless the series satisfies its invariants.
void validate(const VolumeSeries& series);

template <typename T>
struct Volume {
    Dims dims;
    Spacing spacing;
    std::vector<T> data;

    Volume() = default;
    Volume(Dims d, Spacing s, T fill = T{}) : dims(d), spacing(s), data(d.voxels(), fill) {}

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }
};

using ScalarVolume = Volume<double>;

/// Boolean voxel mask; nonzero means "selected".
using RoiMask = Volume<std::uint8_t>;

inline std::size_t count_selected(const RoiMask& mask) {
    std::size_t n = 0;
    for (auto v : mask.data) {
        n += v != 0;
    }
    return n;
}

}  // namespace dcemap
