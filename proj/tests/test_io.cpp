#include "dcemap/error.hpp"
#include "dcemap/io.hpp"
#include "fixtures.hpp"
#include "temp_dir.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace dcemap {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::IoFailure;
}

VolumeSeries random_series(std::mt19937_64& rng) {
    VolumeSeries s;
    s.dims = {8, 8, 4};
    s.spacing = {0.5, 0.5, 1.25};
    s.frame_times = {0.0, 2.0, 4.0, 6.0, 100.0};
    std::uniform_real_distribution<float> v(-1024.0f, 3000.0f);
    s.data.resize(s.dims.voxels() * 5);
    for (double& x : s.data) {
        x = v(rng);
    }
    return s;
}

TEST(VolumeSeriesIo, RoundTrip) {
    TempDir dir;
    std::mt19937_64 rng(1);
    const VolumeSeries s = random_series(rng);
    io::write_volume_series(s, dir / "s.nii", dir / "s.json", "test");
    const VolumeSeries back = io::read_volume_series(dir / "s.nii", dir / "s.json");
    EXPECT_EQ(back.dims, s.dims);
    EXPECT_EQ(back.spacing, s.spacing);
    EXPECT_EQ(back.frame_times, s.frame_times);
    EXPECT_EQ(back.data, s.data);
}

TEST(VolumeSeriesIo, TimingMismatch) {
    TempDir dir;
    std::mt19937_64 rng(2);
    io::write_volume_series(random_series(rng), dir / "s.nii", dir / "s.json");
    io::write_times(dir / "four.json", {{0.0, 1.0, 2.0, 3.0}, 60.0, ""});
    EXPECT_EQ(code_of([&] { io::read_volume_series(dir / "s.nii", dir / "four.json"); }),
              ErrorCode::TimingMismatch);
}

TEST(VolumeSeriesIo, Int16PayloadIsScaledOnRead) {
    TempDir dir;
    nifti::Image img;
    img.dims = {2, 1, 1, 4};
    img.data = {-1000.0, -990.0, -900.0, 0.0, 100.0, 200.0, 300.0, 400.5};
    nifti::WriteOptions opts;
    opts.type = nifti::DataType::Int16;
    opts.slope = 0.5;
    opts.intercept = -1000.0;
    nifti::write(dir / "i.nii", img, opts);
    io::write_times(dir / "t.json", {{0.0, 1.0, 2.0, 3.0}, std::nullopt, ""});
    const VolumeSeries s = io::read_volume_series(dir / "i.nii", dir / "t.json");
    EXPECT_EQ(s.data, img.data);
    EXPECT_EQ(s.at(3, 1), 0.5 * 2801 - 1000.0);
}

TEST(TimesSidecarIo, RoundTripAndValidation) {
    TempDir dir;
    io::write_times(dir / "t.json", {{0.0, 0.8, 1.6, 100.0}, 75.0, "gated"});
    const io::TimesSidecar t = io::read_times(dir / "t.json");
    EXPECT_EQ(t.frame_times_s, (std::vector<double>{0.0, 0.8, 1.6, 100.0}));
    EXPECT_EQ(t.heart_rate_bpm, 75.0);
    EXPECT_EQ(t.description, "gated");

    spit(dir / "bad.json", R"({"frame_times_s": [0, 2, 1, 3]})");
    EXPECT_EQ(code_of([&] { io::read_times(dir / "bad.json"); }), ErrorCode::InvalidArgument);
    spit(dir / "junk.json", "not json");
    EXPECT_EQ(code_of([&] { io::read_times(dir / "junk.json"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { io::read_times(dir / "none.json"); }), ErrorCode::IoFailure);
}

ParameterMaps sample_maps() {
    ParameterMaps maps({4, 3, 2}, {0.5, 0.5, 1.25});
    for (std::size_t v = 0; v < 24; ++v) {
        const auto st = static_cast<FitStatus>(v % 5);
        FitResult r;
        r.status = st;
        if (st != FitStatus::Excluded && st != FitStatus::NoSignal) {
            r.params = GammaVariateParams{100.0 + static_cast<double>(v), 12.5, 3.0};
            r.derived = derive_params(*r.params);
            r.rmse = 1.5;
            r.r_squared = 0.875;
        }
        maps.store(v, r);
    }
    return maps;
}

TEST(MapsIo, WritesEightFilesAndRoundTrips) {
    TempDir dir;
    const ParameterMaps maps = sample_maps();
    io::write_maps(maps, dir / "out");
    for (const auto& name : io::map_file_names()) {
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / name)) << name;
    }
    EXPECT_EQ(io::map_file_names().size(), 8u);
    EXPECT_FALSE(std::filesystem::exists(dir / "out" / "manifest.json"));

    const ParameterMaps back = io::read_maps(dir / "out");
    EXPECT_EQ(back.status.data, maps.status.data);
    const auto a = maps.scalar_maps();
    const auto b = back.scalar_maps();
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t v = 0; v < 24; ++v) {
            const double x = (*a[k].second)[v];
            const double y = (*b[k].second)[v];
            if (std::isnan(x)) {
                EXPECT_TRUE(std::isnan(y));
            } else {
                EXPECT_EQ(y, static_cast<double>(static_cast<float>(x))) << a[k].first;
            }
        }
    }
    for (double s : nifti::read(dir / "out" / "status.nii").data) {
        EXPECT_TRUE(s == 0 || s == 1 || s == 2 || s == 3 || s == 4);
    }
    EXPECT_EQ(nifti::read(dir / "out" / "status.nii").stored_type, nifti::DataType::UInt8);
}

TEST(MapsIo, ManifestRecordsDefaults) {
    TempDir dir;
    io::RunManifest m;
    m.baseline_hu = 42.0;
    m.aorta_roi = "sphere";
    m.inputs = {"series.nii", "times.json"};
    m.created_utc = "2026-01-01T00:00:00Z";
    io::write_maps(sample_maps(), dir.path(), m);
    const json j = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(j.at("threshold_hu").get<double>(), 100.0);
    EXPECT_EQ(j.at("sigma_mm").get<double>(), 1.0);
    EXPECT_EQ(j.at("software").at("version"), io::kSoftwareVersion);
    EXPECT_EQ(j.at("pipeline").get<std::vector<std::string>>(), pipeline_stages());
    EXPECT_EQ(j.at("pipeline").front(), "read");
    EXPECT_EQ(j.at("pipeline").back(), "write_maps");
    EXPECT_EQ(j.at("baseline_hu").get<double>(), 42.0);
    EXPECT_EQ(j.at("bounds_policy").at("y_max_band_hu").get<double>(), 40.0);
    EXPECT_EQ(j.at("bounds_policy").at("t_peak_band_s").get<double>(), 5.0);
    EXPECT_EQ(j.at("status_codes").size(), 5u);
    EXPECT_EQ(j.at("created_utc"), "2026-01-01T00:00:00Z");
}

TEST(MapsIo, UnwritableDirectory) {
    TempDir dir;
    spit(dir / "file", "x");
    EXPECT_EQ(code_of([&] { io::write_maps(sample_maps(), dir / "file" / "sub"); }),
              ErrorCode::IoFailure);
}

TEST(MaskIo, RoundTripAndSphere) {
    TempDir dir;
    const RoiMask m = io::sphere_mask({9, 9, 3}, {0.5, 0.5, 1.0}, {2.0, 2.0, 1.0}, 1.0);
    EXPECT_EQ(m[m.dims.index(4, 4, 1)], 1);
    EXPECT_EQ(m[m.dims.index(6, 4, 1)], 1);
    EXPECT_EQ(m[m.dims.index(7, 4, 1)], 0);
    EXPECT_EQ(m[m.dims.index(4, 4, 0)], 1);
    EXPECT_EQ(m[m.dims.index(5, 4, 0)], 0);
    io::write_mask(m, dir / "m.nii");
    const RoiMask back = io::read_mask(dir / "m.nii");
    EXPECT_EQ(back.data, m.data);
    EXPECT_EQ(back.spacing, m.spacing);
}

TEST(PlaneIo, RoundTripAndValidation) {
    TempDir dir;
    PlaneSpec p;
    p.origin = {1.0, 2.0, 3.5};
    p.axis_u = {0.6, 0.8, 0.0};
    p.axis_v = {0.0, 0.0, 1.0};
    p.nu = 32;
    p.nv = 16;
    p.sample_spacing = 0.25;
    io::write_plane(dir / "p.json", p);
    const PlaneSpec q = io::read_plane(dir / "p.json");
    EXPECT_EQ(q.origin, p.origin);
    EXPECT_EQ(q.axis_u, p.axis_u);
    EXPECT_EQ(q.axis_v, p.axis_v);
    EXPECT_EQ(q.nu, 32u);
    EXPECT_EQ(q.nv, 16u);
    EXPECT_EQ(q.sample_spacing, 0.25);

    spit(dir / "skew.json",
         R"({"origin_mm":[0,0,0],"axis_u":[1,0,0],"axis_v":[0.5,1,0],"size":[2,2],"sample_spacing_mm":1})");
    EXPECT_EQ(code_of([&] { io::read_plane(dir / "skew.json"); }), ErrorCode::InvalidArgument);
}

TEST(PhantomIo, ParsesRegionsAndSchedule) {
    const io::PhantomDocument doc = io::parse_phantom(R"({
        "dims": [16, 16, 2], "spacing_mm": [0.5, 0.5, 1.25],
        "background_hu": 5, "noise_sigma_hu": 20, "seed": 9,
        "regions": [
          {"name": "proximal", "sphere": {"center_mm": [2, 2, 0.5], "radius_mm": 1.5},
           "y_max": 350, "t_peak": 12, "alpha": 4},
          {"name": "distal", "box": {"lo_mm": [4, 4, 0], "hi_mm": [8, 8, 2.5]},
           "y_max": 200, "t_peak": 20, "alpha": 3, "onset_shift_s": 1.5}],
        "schedule": {"heart_rate_bpm": 60, "beats_per_frame": 2}
    })");
    EXPECT_EQ(doc.spec.dims(), (Dims{16, 16, 2}));
    EXPECT_EQ(doc.spec.background(), 5.0);
    EXPECT_EQ(doc.spec.noise_sigma(), 20.0);
    EXPECT_EQ(doc.spec.seed(), 9u);
    ASSERT_EQ(doc.spec.regions().size(), 2u);
    EXPECT_EQ(doc.spec.regions()[1].onset_shift, 1.5);
    EXPECT_EQ(doc.spec.regions()[0].truth.alpha, 4.0);
    EXPECT_EQ(doc.schedule.frame_times, make_schedule(60.0, 2).frame_times);

    const io::PhantomDocument explicit_times = io::parse_phantom(R"({
        "dims": [2, 2, 1], "spacing_mm": [1, 1, 1],
        "regions": [], "schedule": {"frame_times_s": [0, 1, 2, 5]}})");
    EXPECT_EQ(explicit_times.schedule.frame_times, (std::vector<double>{0, 1, 2, 5}));

    EXPECT_EQ(code_of([] {
                  io::parse_phantom(R"({"dims": [8, 8, 1], "spacing_mm": [1, 1, 1],
                    "regions": [
                      {"name": "a", "sphere": {"center_mm": [2, 2, 0], "radius_mm": 2}, "y_max": 1, "t_peak": 1, "alpha": 1},
                      {"name": "b", "sphere": {"center_mm": [3, 2, 0], "radius_mm": 2}, "y_max": 1, "t_peak": 1, "alpha": 1}],
                    "schedule": {"frame_times_s": [0, 1, 2, 3]}})");
              }),
              ErrorCode::OverlappingRegions);
    EXPECT_EQ(code_of([] { io::parse_phantom(R"({"dims": [8, 8]})"); }), ErrorCode::InvalidArgument);
}

TEST(SliceExport, WindowMapping) {
    EXPECT_EQ(io::window_gray(-100.0, -100.0, 100.0), 0);
    EXPECT_EQ(io::window_gray(100.0, -100.0, 100.0), 255);
    EXPECT_EQ(io::window_gray(0.0, -100.0, 100.0), 128);
    EXPECT_EQ(io::window_gray(-500.0, -100.0, 100.0), 0);
    EXPECT_EQ(io::window_gray(500.0, -100.0, 100.0), 255);
    EXPECT_EQ(io::window_gray(std::nan(""), -100.0, 100.0), 0);
}

TEST(SliceExport, PgmAndCsvMatchResampling) {
    TempDir dir;
    ScalarVolume vol({6, 6, 3}, {0.5, 0.5, 1.0});
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        vol[i] = 0.1 * static_cast<double>(i * 7 % 23);
    }
    vol[5] = std::nan("");
    io::write_scalar_volume(vol, dir / "map.nii");
    PlaneSpec plane;
    plane.origin = {0.1, 0.2, 0.7};
    plane.axis_u = {0.6, 0.8, 0.0};
    plane.axis_v = {0.0, 0.0, 1.0};
    plane.nu = 5;
    plane.nv = 3;
    plane.sample_spacing = 0.45;
    io::write_plane(dir / "plane.json", plane);

    const SliceImage img =
        io::export_slice(dir / "map.nii", dir / "plane.json", dir / "s.pgm", dir / "s.csv", 0.0, 2.0);
    const SliceImage direct = mpr_slice(io::read_scalar_volume(dir / "map.nii"), plane);
    ASSERT_EQ(img.pixels.size(), direct.pixels.size());

    std::ifstream csv(dir / "s.csv");
    std::string line;
    std::size_t j = 0;
    while (std::getline(csv, line)) {
        std::stringstream row(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(row, cell, ',')) {
            const double expect = direct.pixels[j * plane.nu + i];
            if (std::isnan(expect)) {
                EXPECT_EQ(cell, "nan");
            } else {
                EXPECT_EQ(std::stod(cell), expect);
            }
            ++i;
        }
        EXPECT_EQ(i, plane.nu);
        ++j;
    }
    EXPECT_EQ(j, plane.nv);

    const std::string pgm = slurp(dir / "s.pgm");
    const std::string header = "P5\n5 3\n255\n";
    ASSERT_EQ(pgm.size(), header.size() + 15u);
    EXPECT_EQ(pgm.substr(0, header.size()), header);
    for (std::size_t k = 0; k < 15; ++k) {
        EXPECT_EQ(static_cast<std::uint8_t>(pgm[header.size() + k]),
                  io::window_gray(direct.pixels[k], 0.0, 2.0));
    }
}

TEST(SliceExport, ConstantMapGivesUniformImage) {
    TempDir dir;
    ScalarVolume vol({4, 4, 1}, {1.0, 1.0, 1.0}, 7.0);
    io::write_scalar_volume(vol, dir / "c.nii");
    PlaneSpec plane;
    plane.nu = 3;
    plane.nv = 3;
    io::write_plane(dir / "p.json", plane);
    io::export_slice(dir / "c.nii", dir / "p.json", dir / "c.pgm", dir / "c.csv", 0.0, 10.0);
    const std::string pgm = slurp(dir / "c.pgm");
    const std::string pixels = pgm.substr(pgm.size() - 9);
    EXPECT_EQ(pixels, std::string(9, static_cast<char>(io::window_gray(7.0, 0.0, 10.0))));
    EXPECT_THROW(
        io::export_slice(dir / "c.nii", dir / "p.json", dir / "x.pgm", dir / "x.csv", 5.0, 5.0),
        Error);
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(15.0), "15");
    EXPECT_EQ(io::format_double(std::nan("")), "nan");
    EXPECT_EQ(io::format_double(-INFINITY), "-inf");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
        const double x = u(rng);
        EXPECT_EQ(std::stod(io::format_double(x)), x);
    }
}

TEST(StudyCsv, HeaderAndRows) {
    TempDir dir;
    io::write_study_csv(dir / "s.csv", {{27, "t_peak", 0.01, 0.02, 100}, {7, "t_peak", 0.05, 0.5, 98}});
    EXPECT_EQ(slurp(dir / "s.csv"),
              "budget,parameter,median_abs_rel_error,p90_abs_rel_error,samples\n"
              "27,t_peak,0.01,0.02,100\n"
              "7,t_peak,0.05,0.5,98\n");
}

}  // namespace
}  // namespace dcemap
