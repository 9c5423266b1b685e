#include "dcemap/io.hpp"

#include "dcemap/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dcemap::io {

namespace {

using json = nlohmann::json;

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
}

void save_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoFailure, "short write to " + path.string());
    }
}

Point3 point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a 3-vector");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Runs `body`, translating JSON type errors into data errors.
template <typename F>
auto guarded(const std::string& what, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, what + ": " + e.what());
    }
}

nifti::Image to_image(const ScalarVolume& v) {
    nifti::Image img;
    img.dims = {v.dims.nx, v.dims.ny, v.dims.nz, 1};
    img.spacing = v.spacing;
    img.data = v.data;
    return img;
}

ScalarVolume from_image(const nifti::Image& img, const fs::path& path) {
    if (img.frames() != 1) {
        throw Error(ErrorCode::BadVolumeFile, path.string() + ": expected a 3D volume");
    }
    ScalarVolume v(Dims{img.dims[0], img.dims[1], img.dims[2]}, img.spacing);
    v.data = img.data;
    return v;
}

nifti::WriteOptions uint8_options() {
    nifti::WriteOptions o;
    o.type = nifti::DataType::UInt8;
    return o;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
    }
}

}  // namespace

TimesSidecar read_times(const fs::path& path) {
    const json j = load_json(path);
    return guarded(path.string(), [&] {
        TimesSidecar s;
        s.frame_times_s = j.at("frame_times_s").get<std::vector<double>>();
        if (j.contains("heart_rate_bpm")) {
            s.heart_rate_bpm = j["heart_rate_bpm"].get<double>();
        }
        s.description = j.value("description", std::string{});
        for (std::size_t i = 1; i < s.frame_times_s.size(); ++i) {
            if (!(s.frame_times_s[i] > s.frame_times_s[i - 1])) {
                throw Error(ErrorCode::InvalidArgument,
                            path.string() + ": frame times must be strictly increasing");
            }
        }
        return s;
    });
}

void write_times(const fs::path& path, const TimesSidecar& s) {
    json j;
    j["frame_times_s"] = s.frame_times_s;
    if (s.heart_rate_bpm) {
        j["heart_rate_bpm"] = *s.heart_rate_bpm;
    }
    if (!s.description.empty()) {
        j["description"] = s.description;
    }
    save_text(path, j.dump(2) + "\n");
}

VolumeSeries read_volume_series(const fs::path& image, const fs::path& times) {
    const nifti::Image img = nifti::read(image);
    const TimesSidecar sidecar = read_times(times);
    if (sidecar.frame_times_s.size() != img.frames()) {
        throw Error(ErrorCode::TimingMismatch, std::to_string(img.frames()) + " frames but " +
                                                   std::to_string(sidecar.frame_times_s.size()) +
                                                   " times");
    }
    VolumeSeries s;
    s.dims = {img.dims[0], img.dims[1], img.dims[2]};
    s.spacing = img.spacing;
    s.frame_times = sidecar.frame_times_s;
    s.data = img.data;
    validate(s);
    return s;
}

void write_volume_series(const VolumeSeries& series, const fs::path& image, const fs::path& times,
                         const std::string& description) {
    validate(series);
    nifti::Image img;
    img.dims = {series.dims.nx, series.dims.ny, series.dims.nz, series.frames()};
    img.spacing = series.spacing;
    img.data = series.data;
    nifti::WriteOptions options;
    options.description = description;
    nifti::write(image, img, options);
    write_times(times, {series.frame_times, std::nullopt, description});
}

ScalarVolume read_scalar_volume(const fs::path& path) { return from_image(nifti::read(path), path); }

void write_scalar_volume(const ScalarVolume& volume, const fs::path& path) {
    nifti::write(path, to_image(volume));
}

RoiMask read_mask(const fs::path& path) {
    const ScalarVolume v = read_scalar_volume(path);
    RoiMask m(v.dims, v.spacing, 0);
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        m[i] = v.data[i] != 0.0 && !std::isnan(v.data[i]);
    }
    return m;
}

void write_mask(const RoiMask& mask, const fs::path& path) {
    nifti::Image img;
    img.dims = {mask.dims.nx, mask.dims.ny, mask.dims.nz, 1};
    img.spacing = mask.spacing;
    img.data.assign(mask.data.begin(), mask.data.end());
    nifti::write(path, img, uint8_options());
}

RoiMask sphere_mask(Dims dims, Spacing spacing, Point3 c, double radius_mm) {
    if (!(radius_mm > 0.0) || !std::isfinite(radius_mm)) {
        throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
    }
    RoiMask m(dims, spacing, 0);
    for (std::size_t z = 0; z < dims.nz; ++z) {
        for (std::size_t y = 0; y < dims.ny; ++y) {
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const Point3 p = voxel_center(spacing, x, y, z);
                const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) +
                                  (p[2] - c[2]) * (p[2] - c[2]);
                m[dims.index(x, y, z)] = d2 <= radius_mm * radius_mm;
            }
        }
    }
    return m;
}

PlaneSpec read_plane(const fs::path& path) {
    const json j = load_json(path);
    PlaneSpec p = guarded(path.string(), [&] {
        PlaneSpec p;
        p.origin = point(j.at("origin_mm"), "origin_mm");
        p.axis_u = point(j.at("axis_u"), "axis_u");
        p.axis_v = point(j.at("axis_v"), "axis_v");
        const auto size = j.at("size").get<std::vector<std::size_t>>();
        if (size.size() != 2) {
            throw Error(ErrorCode::InvalidArgument, "size must be [nu, nv]");
        }
        p.nu = size[0];
        p.nv = size[1];
        p.sample_spacing = j.at("sample_spacing_mm").get<double>();
        return p;
    });
    validate(p);
    return p;
}

void write_plane(const fs::path& path, const PlaneSpec& p) {
    json j;
    j["origin_mm"] = p.origin;
    j["axis_u"] = p.axis_u;
    j["axis_v"] = p.axis_v;
    j["size"] = {p.nu, p.nv};
    j["sample_spacing_mm"] = p.sample_spacing;
    save_text(path, j.dump(2) + "\n");
}

PhantomDocument parse_phantom(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("phantom spec: ") + e.what());
    }
    return guarded("phantom spec", [&] {
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        if (dims.size() != 3) {
            throw Error(ErrorCode::InvalidArgument, "dims must be [nx, ny, nz]");
        }
        const Point3 sp = point(j.at("spacing_mm"), "spacing_mm");
        PhantomSpec spec(Dims{dims[0], dims[1], dims[2]}, Spacing{sp[0], sp[1], sp[2]},
                         j.value("background_hu", 0.0), j.value("noise_sigma_hu", 0.0),
                         j.value("seed", std::uint64_t{0}));

        for (const auto& r : j.at("regions")) {
            PhantomRegion region;
            region.name = r.value("name", "region" + std::to_string(spec.regions().size()));
            if (r.contains("sphere")) {
                region.shape = Sphere{point(r["sphere"].at("center_mm"), "center_mm"),
                                      r["sphere"].at("radius_mm").get<double>()};
            } else if (r.contains("box")) {
                region.shape = Box{point(r["box"].at("lo_mm"), "lo_mm"),
                                   point(r["box"].at("hi_mm"), "hi_mm")};
            } else {
                throw Error(ErrorCode::InvalidArgument, "region needs a 'sphere' or 'box'");
            }
            region.truth = {r.at("y_max").get<double>(), r.at("t_peak").get<double>(),
                            r.at("alpha").get<double>()};
            region.onset_shift = r.value("onset_shift_s", 0.0);
            spec.add_region(std::move(region));
        }

        SamplingSchedule schedule;
        const json& s = j.at("schedule");
        if (s.contains("frame_times_s")) {
            schedule.frame_times = s["frame_times_s"].get<std::vector<double>>();
            validate(schedule);
        } else {
            schedule = make_schedule(s.at("heart_rate_bpm").get<double>(),
                                     s.at("beats_per_frame").get<int>(),
                                     s.value("n_dynamic_frames", 26),
                                     s.value("late_frame_time_s", 100.0));
        }
        return PhantomDocument{std::move(spec), std::move(schedule)};
    });
}

PhantomDocument read_phantom(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_phantom(ss.str());
}

const std::vector<std::string>& map_file_names() {
    static const std::vector<std::string> names{"y_max.nii", "t_peak.nii", "alpha.nii",
                                                "t01.nii",   "rt.nii",     "rmse.nii",
                                                "r2.nii",    "status.nii"};
    return names;
}

std::string manifest_json(const RunManifest& m) {
    const FitConfig& c = m.options.fit;
    json j;
    j["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
    j["pipeline"] = pipeline_stages();
    j["sigma_mm"] = m.options.sigma_mm;
    j["threshold_hu"] = m.options.threshold_hu;
    j["fit_config"] = {{"max_iterations", c.max_iterations},
                       {"sse_rel_tolerance", c.sse_rel_tolerance},
                       {"step_tolerance", c.step_tolerance},
                       {"alpha_cap", c.alpha_cap},
                       {"initial_alpha", c.initial_alpha},
                       {"initial_damping", c.initial_damping},
                       {"no_signal_floor_hu", c.no_signal_floor_hu},
                       {"arrival_fraction", c.arrival_fraction}};
    j["bounds_policy"] = {
        {"y_max", "max(contrast) +/- " + format_double(c.y_max_band_hu) + " HU"},
        {"t_peak", "time of max(contrast) +/- " + format_double(c.t_peak_band_s) +
                       " s, lower edge floored at " + format_double(c.t_peak_floor_s) + " s"},
        {"alpha", "[0, " + format_double(c.alpha_cap) + "]"},
        {"y_max_band_hu", c.y_max_band_hu},
        {"t_peak_band_s", c.t_peak_band_s},
        {"t_peak_floor_s", c.t_peak_floor_s}};
    j["status_codes"] = {{"0", "converged"},      {"1", "excluded"},
                         {"2", "no-signal"},      {"3", "max-iterations"},
                         {"4", "degenerate-shape"}};
    if (m.baseline_hu) {
        j["baseline_hu"] = *m.baseline_hu;
    }
    j["aorta_roi"] = m.aorta_roi;
    j["inputs"] = m.inputs;
    j["outputs"] = map_file_names();
    j["created_utc"] = m.created_utc;
    return j.dump(2) + "\n";
}

void write_maps(const ParameterMaps& maps, const fs::path& out_dir,
                const std::optional<RunManifest>& manifest) {
    ensure_dir(out_dir);
    for (const auto& [stem, volume] : maps.scalar_maps()) {
        write_scalar_volume(*volume, out_dir / (stem + ".nii"));
    }
    nifti::Image status;
    status.dims = {maps.status.dims.nx, maps.status.dims.ny, maps.status.dims.nz, 1};
    status.spacing = maps.status.spacing;
    status.data.assign(maps.status.data.begin(), maps.status.data.end());
    nifti::write(out_dir / "status.nii", status, uint8_options());
    if (manifest) {
        save_text(out_dir / "manifest.json", manifest_json(*manifest));
    }
}

ParameterMaps read_maps(const fs::path& dir) {
    const nifti::Image status = nifti::read(dir / "status.nii");
    const Dims dims{status.dims[0], status.dims[1], status.dims[2]};
    ParameterMaps maps(dims, status.spacing);
    for (std::size_t i = 0; i < status.data.size(); ++i) {
        maps.status[i] = static_cast<std::uint8_t>(status.data[i]);
    }
    for (auto& [stem, volume] : maps.scalar_maps()) {
        const fs::path path = dir / (stem + ".nii");
        ScalarVolume v = read_scalar_volume(path);
        if (v.dims != dims) {
            throw Error(ErrorCode::ShapeMismatch, path.string() + " differs from status.nii");
        }
        *volume = std::move(v);
    }
    return maps;
}

std::uint8_t window_gray(double value, double lo, double hi) {
    if (std::isnan(value)) {
        return 0;
    }
    const double scaled = std::clamp((value - lo) / (hi - lo) * 255.0, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::floor(scaled + 0.5));
}

void write_pgm(const fs::path& path, const SliceImage& image, double lo, double hi) {
    if (!(lo < hi)) {
        throw Error(ErrorCode::InvalidArgument, "window lo must be below hi");
    }
    std::string out = "P5\n" + std::to_string(image.nu) + " " + std::to_string(image.nv) + "\n255\n";
    out.reserve(out.size() + image.pixels.size());
    for (double v : image.pixels) {
        out.push_back(static_cast<char>(window_gray(v, lo, hi)));
    }
    save_text(path, out);
}

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(const fs::path& path, const SliceImage& image) {
    std::string out;
    for (std::size_t j = 0; j < image.nv; ++j) {
        for (std::size_t i = 0; i < image.nu; ++i) {
            if (i > 0) {
                out.push_back(',');
            }
            out += format_double(image.pixels[j * image.nu + i]);
        }
        out.push_back('\n');
    }
    save_text(path, out);
}

SliceImage export_slice(const fs::path& map_file, const fs::path& plane_file,
                        const fs::path& out_pgm, const fs::path& out_csv, double lo, double hi) {
    if (!(lo < hi)) {
        throw Error(ErrorCode::InvalidArgument, "window lo must be below hi");
    }
    const ScalarVolume map = read_scalar_volume(map_file);
    const PlaneSpec plane = read_plane(plane_file);
    SliceImage slice = mpr_slice(map, plane);
    write_pgm(out_pgm, slice, lo, hi);
    write_csv(out_csv, slice);
    return slice;
}

void write_study_csv(const fs::path& path, const std::vector<StudyRow>& rows) {
    std::string out = "budget,parameter,median_abs_rel_error,p90_abs_rel_error,samples\n";
    for (const auto& r : rows) {
        out += std::to_string(r.budget) + "," + r.parameter + "," +
               format_double(r.median_abs_rel_error) + "," + format_double(r.p90_abs_rel_error) +
               "," + std::to_string(r.samples) + "\n";
    }
    save_text(path, out);
}

}  // namespace dcemap::io
