#pragma once

// Shared generators for the unit and acceptance suites.

#include "dcemap/fitting.hpp"
#include "dcemap/model.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dcemap::testing {

/// 60 bpm, a frame every 2 beats for 26 frames, late frame at 100 s.
inline std::vector<double> standard_schedule() {
    std::vector<double> t;
    for (int i = 0; i < 26; ++i) {
        t.push_back(2.0 * i);
    }
    t.push_back(100.0);
    return t;
}

inline TimeSeries sample_series(const GammaVariateParams& p, const std::vector<double>& times) {
    TimeSeries s;
    s.times = times;
    for (double t : times) {
        s.values.push_back(static_cast<double>(oracle::model(p, t)));
    }
    return s;
}

/// True when the truth lies inside the amplitude and peak-time box built
/// around its own noiseless samples (+/-40 HU, +/-5 s), i.e. when a bounded
/// fit can reach it at all.
inline bool admissible(const GammaVariateParams& truth, const std::vector<double>& times) {
    const TimeSeries s = sample_series(truth, times);
    const auto it = std::max_element(s.values.begin(), s.values.end());
    const double peak = *it;
    const double peak_time = s.times[static_cast<std::size_t>(it - s.values.begin())];
    return truth.y_max >= peak - 40.0 && truth.y_max <= peak + 40.0 &&
           truth.t_peak >= std::max(0.1, peak_time - 5.0) && truth.t_peak <= peak_time + 5.0;
}

struct TruthDraw {
    GammaVariateParams truth;
    int rejected = 0;
};

/// Uniform draws from y_max in [50, 500] HU, t_peak in [5, 30] s and alpha in
/// [0.5, 20] (log-uniform), redrawn until admissible on `times`.
inline TruthDraw draw_admissible_truth(std::mt19937_64& rng, const std::vector<double>& times) {
    std::uniform_real_distribution<double> y(50.0, 500.0), tp(5.0, 30.0);
    std::uniform_real_distribution<double> la(std::log(0.5), std::log(20.0));
    TruthDraw d;
    for (;;) {
        d.truth = {y(rng), tp(rng), std::exp(la(rng))};
        if (admissible(d.truth, times)) {
            return d;
        }
        ++d.rejected;
    }
}

inline double rel_error(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace dcemap::testing
