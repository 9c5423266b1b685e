#include "dcemap/cli.hpp"

#include "dcemap/error.hpp"
#include "dcemap/io.hpp"
#include "dcemap/phantom.hpp"
#include "dcemap/pipeline.hpp"

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <ctime>
#include <string>
#include <vector>

namespace dcemap {

namespace {

namespace fs = std::filesystem;

struct PhantomArgs {
    std::string spec;
    std::string out_dir;
};

struct FitArgs {
    std::string series;
    std::string times;
    std::string aorta_mask;
    std::vector<double> aorta_sphere;
    std::string out_dir;
    PipelineOptions options;
};

struct SliceArgs {
    std::string map;
    std::string plane;
    std::string out_pgm;
    std::string out_csv;
    std::vector<double> window;
};

struct StudyArgs {
    std::string spec;
    std::vector<std::size_t> budgets;
    double noise = -1.0;
    std::size_t reps = 50;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    unsigned workers = 0;
};

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

void print_status_counts(const ParameterMaps& maps, std::ostream& out) {
    std::array<std::size_t, 5> counts{};
    for (auto s : maps.status.data) {
        if (s < counts.size()) {
            ++counts[s];
        }
    }
    for (std::size_t s = 0; s < counts.size(); ++s) {
        out << "  " << to_string(static_cast<FitStatus>(s)) << ": " << counts[s] << "\n";
    }
}

int run_phantom(const PhantomArgs& a, std::ostream& out) {
    const io::PhantomDocument doc = io::read_phantom(a.spec);
    const PhantomVolumes ph = synthesize(doc.spec, doc.schedule);
    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
    }
    io::write_volume_series(ph.series, dir / "series.nii", dir / "times.json", "dcemap phantom");
    io::write_maps(ph.truth, dir / "truth");
    out << "phantom: " << ph.series.dims.nx << "x" << ph.series.dims.ny << "x"
        << ph.series.dims.nz << "x" << ph.series.frames() << " written to " << dir.string()
        << "\n";
    return kExitOk;
}

int run_fit(const FitArgs& a, std::ostream& out) {
    const VolumeSeries series = io::read_volume_series(a.series, a.times);
    RoiMask roi;
    std::string roi_desc;
    if (!a.aorta_mask.empty()) {
        roi = io::read_mask(a.aorta_mask);
        roi_desc = "mask " + a.aorta_mask;
    } else {
        const auto& s = a.aorta_sphere;
        roi = io::sphere_mask(series.dims, series.spacing, {s[0], s[1], s[2]}, s[3]);
        roi_desc = "sphere center_mm=(" + io::format_double(s[0]) + "," + io::format_double(s[1]) +
                   "," + io::format_double(s[2]) + ") radius_mm=" + io::format_double(s[3]);
    }
    const PipelineResult result = run_pipeline(series, roi, a.options);

    io::RunManifest manifest;
    manifest.options = a.options;
    manifest.baseline_hu = result.baseline.y_b;
    manifest.aorta_roi = roi_desc;
    manifest.inputs = {a.series, a.times};
    manifest.created_utc = utc_now();
    io::write_maps(result.maps, a.out_dir, manifest);

    out << "baseline y_b = " << io::format_double(result.baseline.y_b) << " HU\n";
    out << "voxels included: " << count_selected(result.mask) << " of "
        << result.mask.data.size() << "\n";
    print_status_counts(result.maps, out);
    return kExitOk;
}

int run_slice(const SliceArgs& a, std::ostream& out) {
    const SliceImage img =
        io::export_slice(a.map, a.plane, a.out_pgm, a.out_csv, a.window[0], a.window[1]);
    out << "slice " << img.nu << "x" << img.nv << " written to " << a.out_pgm << " and "
        << a.out_csv << "\n";
    return kExitOk;
}

int run_study(const StudyArgs& a, std::ostream& out) {
    io::PhantomDocument doc = io::read_phantom(a.spec);
    const double noise = a.noise >= 0.0 ? a.noise : doc.spec.noise_sigma();
    const std::uint64_t seed = a.seed_given ? a.seed : doc.spec.seed();
    doc.spec.set_noise(noise, seed);
    std::vector<std::size_t> budgets = a.budgets;
    if (budgets.empty()) {
        budgets.push_back(doc.schedule.frame_times.size());
    }
    const auto rows = frame_count_study(doc.spec, doc.schedule, budgets, a.reps, seed, {}, a.workers);
    io::write_study_csv(a.out, rows);
    for (const auto& r : rows) {
        out << r.budget << " frames  " << r.parameter << "  median=" << io::format_double(r.median_abs_rel_error)
            << "  p90=" << io::format_double(r.p90_abs_rel_error) << "\n";
    }
    return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gamma-variate dynamic contrast enhancement maps for 4D CT", "dcemap"};
    app.require_subcommand(1);

    PhantomArgs pa;
    auto* phantom = app.add_subcommand("phantom", "Render a digital phantom and its truth maps");
    phantom->add_option("--spec", pa.spec, "Phantom JSON description")->required()->check(CLI::ExistingFile);
    phantom->add_option("--out-dir", pa.out_dir, "Output directory")->required();

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit every voxel of a 4D series and write parameter maps");
    fit->add_option("--series", fa.series, "4D NIfTI volume series (HU)")->required()->check(CLI::ExistingFile);
    fit->add_option("--times", fa.times, "Frame-time JSON sidecar")->required()->check(CLI::ExistingFile);
    auto* mask_opt = fit->add_option("--aorta-mask", fa.aorta_mask, "Descending-aorta ROI mask (NIfTI)")
                         ->check(CLI::ExistingFile);
    auto* sphere_opt = fit->add_option("--aorta-sphere", fa.aorta_sphere,
                                       "Descending-aorta ROI sphere cx,cy,cz,r in mm")
                           ->delimiter(',')
                           ->expected(4);
    mask_opt->excludes(sphere_opt);
    fit->add_option("--out-dir", fa.out_dir, "Output directory for maps")->required();
    fit->add_option("--sigma-mm", fa.options.sigma_mm, "Gaussian smoothing sigma (mm)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    fit->add_option("--threshold-hu", fa.options.threshold_hu,
                    "Exclude voxels whose contrast time-sum is below this (HU)")
        ->capture_default_str();
    fit->add_option("--workers", fa.options.workers, "Worker threads (0 = all cores)")->capture_default_str();
    fit->add_option("--max-iterations", fa.options.fit.max_iterations, "Fit iteration limit")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    SliceArgs sa;
    auto* slice = app.add_subcommand("slice", "Resample a map on a plane to PGM and CSV");
    slice->add_option("--map", sa.map, "Parameter map (NIfTI)")->required()->check(CLI::ExistingFile);
    slice->add_option("--plane", sa.plane, "Plane JSON file")->required()->check(CLI::ExistingFile);
    slice->add_option("--out-pgm", sa.out_pgm, "Windowed 8-bit image")->required();
    slice->add_option("--out-csv", sa.out_csv, "Raw sampled values")->required();
    slice->add_option("--window", sa.window, "Display window lo,hi")->required()->delimiter(',')->expected(2);

    StudyArgs st;
    auto* study = app.add_subcommand("study", "Frame-budget recovery study on a noisy phantom");
    study->add_option("--spec", st.spec, "Phantom JSON description")->required()->check(CLI::ExistingFile);
    study->add_option("--budgets", st.budgets, "Frame budgets, e.g. 27,14,7")->delimiter(',');
    study->add_option("--noise", st.noise, "Noise sigma in HU (default: from the spec)");
    study->add_option("--reps", st.reps, "Replicates per budget")->capture_default_str()->check(CLI::PositiveNumber);
    auto* seed_opt = study->add_option("--seed", st.seed, "Noise seed (default: from the spec)");
    study->add_option("--out", st.out, "Output CSV")->required();
    study->add_option("--workers", st.workers, "Worker threads (0 = all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) {
            return kExitOk;
        }
        const CLI::App* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().back();
        err << "\n" << failed->help();
        return kExitUsage;
    }

    try {
        if (*phantom) {
            return run_phantom(pa, out);
        }
        if (*fit) {
            if (fa.aorta_mask.empty() && fa.aorta_sphere.empty()) {
                err << "fit: one of --aorta-mask or --aorta-sphere is required\n" << fit->help();
                return kExitUsage;
            }
            return run_fit(fa, out);
        }
        if (*slice) {
            if (!(sa.window[0] < sa.window[1])) {
                err << "slice: --window needs lo < hi\n";
                return kExitUsage;
            }
            return run_slice(sa, out);
        }
        if (*study) {
            st.seed_given = seed_opt->count() > 0;
            return run_study(st, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace dcemap
