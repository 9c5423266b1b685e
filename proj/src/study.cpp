#include "dcemap/error.hpp"
#include "dcemap/phantom.hpp"
#include "dcemap/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dcemap {

std::vector<std::size_t> select_frames(const SamplingSchedule& schedule, std::size_t budget,
                                       double peak_time) {
    validate(schedule);
    const std::size_t n = schedule.frame_times.size();
    if (budget < 4) {
        throw Error(ErrorCode::InsufficientFrames, "frame budget below 4");
    }
    if (budget > n) {
        throw Error(ErrorCode::InvalidArgument, "frame budget exceeds the schedule length");
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(schedule.frame_times[i] - peak_time) <
            std::abs(schedule.frame_times[peak] - peak_time)) {
            peak = i;
        }
    }
    std::set<std::size_t> keep{0, peak, n - 1};
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep.contains(i)) {
            candidates.push_back(i);
        }
    }
    // Fill with candidates at the centres of `fill` equal bins.
    const std::size_t fill = budget - keep.size();
    for (std::size_t k = 0; k < fill; ++k) {
        const std::size_t pos = ((2 * k + 1) * candidates.size()) / (2 * fill);
        keep.insert(candidates[pos]);
    }
    return {keep.begin(), keep.end()};
}

std::vector<StudyRow> frame_count_study(const PhantomSpec& spec, const SamplingSchedule& schedule,
                                        const std::vector<std::size_t>& frame_budgets,
                                        std::size_t replicates, std::uint64_t seed,
                                        const FitConfig& config, unsigned workers) {
    validate(schedule);
    if (replicates < 1) {
        throw Error(ErrorCode::InvalidArgument, "at least one replicate is required");
    }
    if (spec.regions().empty()) {
        throw Error(ErrorCode::InvalidArgument, "the study phantom needs at least one region");
    }
    for (std::size_t b : frame_budgets) {
        if (b < 4) {
            throw Error(ErrorCode::InsufficientFrames, "frame budget below 4");
        }
        if (b > schedule.frame_times.size()) {
            throw Error(ErrorCode::InvalidArgument, "frame budget exceeds the schedule length");
        }
    }

    PhantomSpec clean = spec;
    clean.set_noise(0.0, spec.seed());
    const PhantomVolumes phantom = synthesize(clean, schedule);
    RoiMask mask(phantom.truth.dims(), phantom.truth.status.spacing, 0);
    for (std::size_t v = 0; v < mask.data.size(); ++v) {
        mask[v] = phantom.truth.status[v] == static_cast<std::uint8_t>(FitStatus::Converged);
    }

    const CounterRng streams(seed);
    std::vector<StudyRow> rows;
    for (std::size_t budget : frame_budgets) {
        const auto frames = select_frames(schedule, budget, spec.regions().front().truth.t_peak);
        VolumeSeries subset;
        subset.dims = phantom.series.dims;
        subset.spacing = phantom.series.spacing;
        const std::size_t nv = subset.dims.voxels();
        for (std::size_t f : frames) {
            subset.frame_times.push_back(phantom.series.frame_times[f]);
            const auto first = phantom.series.data.begin() +
                               static_cast<std::ptrdiff_t>(phantom.series.frame_offset(f));
            subset.data.insert(subset.data.end(), first, first + static_cast<std::ptrdiff_t>(nv));
        }

        std::vector<std::vector<double>> pooled;
        std::vector<std::string> names;
        for (std::size_t rep = 0; rep < replicates; ++rep) {
            const std::uint64_t noise_seed = streams.fork(budget).bits(rep);
            const VolumeSeries noisy = add_noise(subset, spec.noise_sigma(), noise_seed);
            const ParameterMaps fitted = fit_volume(noisy, mask, config, workers);
            const RecoveryStats stats = recovery_error(fitted, phantom.truth);
            if (pooled.empty()) {
                pooled.resize(stats.parameters.size());
                for (const auto& p : stats.parameters) {
                    names.push_back(p.parameter);
                }
            }
            for (std::size_t k = 0; k < stats.parameters.size(); ++k) {
                const auto& e = stats.parameters[k].abs_rel_error;
                pooled[k].insert(pooled[k].end(), e.begin(), e.end());
            }
        }
        for (std::size_t k = 0; k < pooled.size(); ++k) {
            rows.push_back({budget, names[k], quantile(pooled[k], 0.5), quantile(pooled[k], 0.9),
                            pooled[k].size()});
        }
    }
    return rows;
}

}  // namespace dcemap
