#include "dcemap/pipeline.hpp"

#include "dcemap/error.hpp"

#include <cmath>
#include <limits>

namespace dcemap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEdgeTolerance = 1e-9;

double dot(const Point3& a, const Point3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Splits a continuous voxel coordinate into a base index and a fractional
// weight. Returns false outside [0, n - 1] (with a small tolerance).
bool locate(double c, std::size_t n, std::size_t& base, double& frac) {
    const double last = static_cast<double>(n - 1);
    if (!(c >= -kEdgeTolerance && c <= last + kEdgeTolerance)) {
        return false;
    }
    c = std::fmin(std::fmax(c, 0.0), last);
    const double fl = std::floor(c);
    base = static_cast<std::size_t>(fl);
    frac = c - fl;
    if (base + 1 >= n) {
        base = n - 1;
        frac = 0.0;
    }
    return true;
}

}  // namespace

void validate(const PlaneSpec& p) {
    for (double c : p.origin) {
        if (!std::isfinite(c)) {
            throw Error(ErrorCode::InvalidArgument, "plane origin must be finite");
        }
    }
    if (std::abs(dot(p.axis_u, p.axis_u) - 1.0) > 1e-9 ||
        std::abs(dot(p.axis_v, p.axis_v) - 1.0) > 1e-9 ||
        std::abs(dot(p.axis_u, p.axis_v)) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "plane axes must be orthonormal");
    }
    if (p.nu == 0 || p.nv == 0 || !(p.sample_spacing > 0.0) || !std::isfinite(p.sample_spacing)) {
        throw Error(ErrorCode::InvalidArgument, "plane size and spacing must be positive");
    }
}

SliceImage mpr_slice(const ScalarVolume& volume, const PlaneSpec& plane) {
    validate(plane);
    const Dims& d = volume.dims;
    if (volume.data.size() != d.voxels() || d.voxels() == 0) {
        throw Error(ErrorCode::ShapeMismatch, "volume payload does not match its dims");
    }
    SliceImage out{plane.nu, plane.nv, std::vector<double>(plane.nu * plane.nv, kNaN)};
    const Spacing& s = volume.spacing;

    for (std::size_t j = 0; j < plane.nv; ++j) {
        for (std::size_t i = 0; i < plane.nu; ++i) {
            const double a = static_cast<double>(i) * plane.sample_spacing;
            const double b = static_cast<double>(j) * plane.sample_spacing;
            const double px = plane.origin[0] + a * plane.axis_u[0] + b * plane.axis_v[0];
            const double py = plane.origin[1] + a * plane.axis_u[1] + b * plane.axis_v[1];
            const double pz = plane.origin[2] + a * plane.axis_u[2] + b * plane.axis_v[2];

            std::size_t x0, y0, z0;
            double fx, fy, fz;
            if (!locate(px / s.sx, d.nx, x0, fx) || !locate(py / s.sy, d.ny, y0, fy) ||
                !locate(pz / s.sz, d.nz, z0, fz)) {
                continue;
            }
            // Corners with zero weight are skipped, so grid-aligned samples
            // never read past the edge or pick up a neighbouring NaN.
            double acc = 0.0;
            bool poisoned = false;
            for (int corner = 0; corner < 8 && !poisoned; ++corner) {
                const int cx = corner & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
                const double w = (cx ? fx : 1.0 - fx) * (cy ? fy : 1.0 - fy) * (cz ? fz : 1.0 - fz);
                if (w == 0.0) {
                    continue;
                }
                const double v = volume[d.index(x0 + cx, y0 + cy, z0 + cz)];
                if (std::isnan(v)) {
                    poisoned = true;
                }
                acc += w * v;
            }
            out.pixels[j * plane.nu + i] = poisoned ? kNaN : acc;
        }
    }
    return out;
}

}  // namespace dcemap
