#pragma once

#include "dcemap/model.hpp"
#include "dcemap/pipeline.hpp"
#include "dcemap/volume.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dcemap {

struct SamplingSchedule {
    std::vector<double> frame_times;
};

/// Throws Error(InvalidArgument) unless the times are strictly increasing and
/// there are at least 4 of them.
void validate(const SamplingSchedule& schedule);

/// Gated acquisition: n_dynamic_frames frames every beats_per_frame beats
/// starting at t = 0, then one late frame at late_frame_time.
SamplingSchedule make_schedule(double heart_rate_bpm, int beats_per_frame,
                               int n_dynamic_frames = 26, double late_frame_time = 100.0);

struct Sphere {
    Point3 center{};
    double radius = 0.0;
};

/// Half-open box [lo, hi) in mm.
struct Box {
    Point3 lo{};
    Point3 hi{};
};

using Shape = std::variant<Sphere, Box>;

bool contains(const Shape& shape, const Point3& p);
bool intersects(const Shape& a, const Shape& b);

struct PhantomRegion {
    std::string name;
    Shape shape;
    GammaVariateParams truth;
    double onset_shift = 0.0;
};

/// Geometry, regions and noise of a digital phantom. Regions are added one by
/// one and an overlapping region is rejected with Error(OverlappingRegions).
class PhantomSpec {
public:
    PhantomSpec(Dims dims, Spacing spacing, double background = 0.0, double noise_sigma = 0.0,
                std::uint64_t seed = 0);

    void add_region(PhantomRegion region);

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    double background() const { return background_; }
    double noise_sigma() const { return noise_sigma_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<PhantomRegion>& regions() const { return regions_; }

    void set_noise(double sigma, std::uint64_t seed);

private:
    Dims dims_;
    Spacing spacing_;
    double background_;
    double noise_sigma_;
    std::uint64_t seed_;
    std::vector<PhantomRegion> regions_;
};

/// Index of the region owning each voxel, or -1 for background.
std::vector<int> region_labels(const PhantomSpec& spec);

struct PhantomVolumes {
    VolumeSeries series;
    ParameterMaps truth;
};

/// Renders the phantom on the schedule. Region voxels follow their gamma
/// variate (zero before the onset shift); background voxels hold the
/// background value. Noise from the spec is added last.
PhantomVolumes synthesize(const PhantomSpec& spec, const SamplingSchedule& schedule);

/// Adds N(0, sigma_hu^2) to every sample; sample k draws counter k of the
/// seeded stream.
VolumeSeries add_noise(VolumeSeries series, double sigma_hu, std::uint64_t seed);

struct ErrorSummary {
    double median = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

struct ParameterErrors {
    std::string parameter;
    std::vector<double> signed_error;
    std::vector<double> abs_rel_error;
    ErrorSummary abs_summary;      // quantiles of |signed error|
    ErrorSummary rel_summary;      // quantiles of the relative error
};

/// Voxelwise errors over voxels converged in both fitted and truth maps, for
/// y_max, t_peak, alpha, t01 and rt (in that order).
struct RecoveryStats {
    std::size_t voxels = 0;
    std::vector<ParameterErrors> parameters;

    const ParameterErrors& get(const std::string& name) const;
};

RecoveryStats recovery_error(const ParameterMaps& fitted, const ParameterMaps& truth);

/// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct StudyRow {
    std::size_t budget = 0;
    std::string parameter;
    double median_abs_rel_error = 0.0;
    double p90_abs_rel_error = 0.0;
    std::size_t samples = 0;
};

/// Frame indices kept for a budget: the first frame, the frame nearest
/// peak_time and the last frame, plus evenly spaced fill.
std::vector<std::size_t> select_frames(const SamplingSchedule& schedule, std::size_t budget,
                                       double peak_time);

/// For each budget and replicate: subsample the noiseless phantom, add fresh
/// noise of the spec's sigma, refit the region voxels, and pool the errors.
/// The peak frame is chosen against the first region's t_peak.
std::vector<StudyRow> frame_count_study(const PhantomSpec& spec, const SamplingSchedule& schedule,
                                        const std::vector<std::size_t>& frame_budgets,
                                        std::size_t replicates, std::uint64_t seed,
                                        const FitConfig& config = {}, unsigned workers = 0);

}  // namespace dcemap
