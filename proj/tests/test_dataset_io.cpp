#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "stress/dataset_io.hpp"
#include "stress/error.hpp"

using namespace stress;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "stress_io_tests";
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream f(p);
    f << content;
    return p;
}

DatasetManifest manifest_at(double rate) {
    DatasetManifest m;
    m.name = "t";
    m.sample_rate_hz = rate;
    m.label_mode = LabelMode::span_file;
    m.subjects.push_back({"s01", "", "csv", ""});
    return m;
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    REQUIRE(false);
    return Errc::io_error;
}

}  // namespace

TEST_CASE("load_recording parses a small csv") {
    auto p = temp_file("ok.csv", "t,hr,sc\n0,70,2.0\n1,71,2.1\n2,72,2.2\n");
    auto rec = io::load_recording(p.string(), manifest_at(1.0), "s01");
    CHECK(rec.size() == 3);
    CHECK(rec.hr[1] == doctest::Approx(71));
    CHECK(rec.sc[2] == doctest::Approx(2.2));
    CHECK(rec.t0_s == 0.0);
    CHECK(rec.sample_rate_hz == 1.0);
    CHECK_FALSE(rec.marker.has_value());
}

TEST_CASE("load_recording reports missing channels") {
    auto p = temp_file("nosc.csv", "t,hr\n0,70\n1,71\n");
    CHECK(code_of([&] { io::load_recording(p.string(), manifest_at(1.0), "s"); }) ==
          Errc::missing_channel);
}

TEST_CASE("load_recording rejects non-numeric rows with the row index") {
    auto p = temp_file("nan.csv", "t,hr,sc\n0,70,2\n1,71,2\n2,72,2\n3,73,2\n4,NaN,2\n");
    try {
        io::load_recording(p.string(), manifest_at(1.0), "s");
        REQUIRE(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::malformed_row);
        CHECK(std::string(e.what()).find("row 5") != std::string::npos);
    }
}

TEST_CASE("load_recording rejects empty files") {
    auto p = temp_file("empty.csv", "");
    CHECK(code_of([&] { io::load_recording(p.string(), manifest_at(1.0), "s"); }) ==
          Errc::empty_file);
    auto p2 = temp_file("header_only.csv", "t,hr,sc\n");
    CHECK(code_of([&] { io::load_recording(p2.string(), manifest_at(1.0), "s"); }) ==
          Errc::empty_file);
}

TEST_CASE("load_recording upsamples to the manifest rate") {
    auto p = temp_file("slow.csv", "t,hr,sc\n0,60,2\n1,70,3\n");
    auto rec = io::load_recording(p.string(), manifest_at(2.0), "s");
    CHECK(rec.size() == 4);
    CHECK(rec.hr == std::vector<double>{60, 65, 70, 70});
    auto fast = temp_file("fast.csv", "t,hr,sc\n0,60,2\n0.1,70,3\n0.2,80,3\n");
    CHECK(code_of([&] { io::load_recording(fast.string(), manifest_at(1.0), "s"); }) ==
          Errc::bad_rate);
}

TEST_CASE("upsample_channel interpolates linearly") {
    CHECK(io::upsample_channel({60, 70}, 1, 2) == std::vector<double>{60, 65, 70, 70});
    std::vector<double> x{1.5, 2.5, 9.0};
    CHECK(io::upsample_channel(x, 5, 5) == x);
    CHECK(io::upsample_channel({50}, 1, 10) == std::vector<double>(10, 50.0));
    CHECK(code_of([&] { io::upsample_channel({1, 2}, 4, 2); }) == Errc::bad_rate);
    CHECK(code_of([&] { io::upsample_channel({1, 2}, 0, 2); }) == Errc::bad_rate);
}

TEST_CASE("upsample_channel is exact on constants") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> val(-5, 5);
    for (int trial = 0; trial < 50; ++trial) {
        double c = val(rng);
        std::vector<double> x(1 + rng() % 40, c);
        double from = 1.0 + (rng() % 5);
        double to = from + (rng() % 7);
        for (double v : io::upsample_channel(x, from, to)) CHECK(v == c);
    }
}

TEST_CASE("detect_marker_peaks threshold and spacing") {
    std::vector<double> zeros(1000, 0.0);
    CHECK(io::detect_marker_peaks(zeros, 15.5).empty());

    std::vector<double> spike(1000, 0.0);
    spike[500] = 100.0;
    auto peaks = io::detect_marker_peaks(spike, 15.5);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0] == 500);

    std::vector<double> two(2000, 0.0);
    two[600] = 100.0;
    two[610] = 100.0;  // 10 samples apart at 15.5 Hz is well under 30 s
    peaks = io::detect_marker_peaks(two, 15.5);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0] == 600);
}

TEST_CASE("detect_marker_peaks output is ascending and >= 30 s apart") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        double rate = 1.0 + static_cast<double>(rng() % 300) / 10.0;
        std::vector<double> m(4000, 0.0);
        std::uniform_real_distribution<double> noise(0.0, 0.2);
        for (auto& v : m) v = noise(rng);
        for (int s = 0; s < 12; ++s) m[rng() % m.size()] = 50.0 + noise(rng);
        auto peaks = io::detect_marker_peaks(m, rate);
        for (std::size_t i = 1; i < peaks.size(); ++i) {
            CHECK(peaks[i] > peaks[i - 1]);
            CHECK(static_cast<double>(peaks[i] - peaks[i - 1]) / rate >= 30.0);
        }
    }
}

namespace {

SubjectRecording flat_recording(double rate, double duration_s) {
    SubjectRecording rec;
    rec.subject_id = "s01";
    rec.sample_rate_hz = rate;
    std::size_t n = static_cast<std::size_t>(duration_s * rate);
    rec.hr.assign(n, 70.0);
    rec.sc.assign(n, 2.0);
    rec.marker = std::vector<double>(n, 0.0);
    return rec;
}

}  // namespace

TEST_CASE("trim_and_label applies the template and ambiguity buffers") {
    // Peaks at 100 s, 700 s, 1300 s; template rest, drive, rest.
    auto rec = flat_recording(10.0, 1500.0);
    std::vector<std::size_t> peaks{1000, 7000, 13000};
    auto [trimmed, spans] = io::trim_and_label(rec, peaks, {0, 1, 0});

    CHECK(trimmed.size() == 12000);
    CHECK(trimmed.t0_s == doctest::Approx(100.0));
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].label == 0);
    CHECK(spans[0].start_s == doctest::Approx(100.0));
    CHECK(spans[0].end_s == doctest::Approx(700.0 - 240.0));
    CHECK(spans[1].label == 1);
    CHECK(spans[1].start_s == doctest::Approx(700.0));
    CHECK(spans[1].end_s == doctest::Approx(1300.0));
}

TEST_CASE("trim_and_label trims the start of a final rest segment") {
    auto rec = flat_recording(10.0, 2000.0);
    std::vector<std::size_t> peaks{1000, 7000, 13000, 19000};
    auto [trimmed, spans] = io::trim_and_label(rec, peaks, {0, 1, 0});
    REQUIRE(spans.size() == 3);
    CHECK(spans[2].label == 0);
    CHECK(spans[2].start_s == doctest::Approx(1300.0 + 240.0));
    CHECK(spans[2].end_s == doctest::Approx(1900.0));
}

TEST_CASE("trim_and_label rejects fewer than two peaks") {
    auto rec = flat_recording(10.0, 600.0);
    CHECK(code_of([&] { io::trim_and_label(rec, {100}, {0, 1}); }) == Errc::too_few_markers);
}

TEST_CASE("trim_and_label drops rest segments shorter than the buffer") {
    auto rec = flat_recording(10.0, 1000.0);
    // Rest of 200 s ahead of driving is swallowed by the 240 s buffer.
    std::vector<std::size_t> peaks{1000, 3000, 8000};
    auto [trimmed, spans] = io::trim_and_label(rec, peaks, {0, 1});
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].label == 1);
}

TEST_CASE("every retained sample has exactly one label or sits in a buffer") {
    auto rec = flat_recording(10.0, 2000.0);
    std::vector<std::size_t> peaks{500, 5500, 11500, 19500};
    auto [trimmed, spans] = io::trim_and_label(rec, peaks, {0, 1, 0});
    REQUIRE(trimmed.labels.has_value());
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
        double t = trimmed.t0_s + static_cast<double>(i) / trimmed.sample_rate_hz;
        int hits = 0;
        for (const auto& s : spans)
            if (t >= s.start_s && t < s.end_s) ++hits;
        CHECK(hits <= 1);
        if (hits == 1) {
            CHECK((*trimmed.labels)[i] != kUnlabeled);
        } else {
            // Outside all spans: must be inside one of the removed buffers.
            bool near_rest_end = (t >= 550.0 - 240.0 && t < 550.0);
            bool in_final_rest_head = (t >= 1150.0 && t < 1150.0 + 240.0);
            CHECK((near_rest_end || in_final_rest_head));
            CHECK((*trimmed.labels)[i] == kUnlabeled);
        }
    }
}

TEST_CASE("remove_artifacts interpolates out-of-range samples") {
    SubjectRecording rec;
    rec.sample_rate_hz = 1.0;
    rec.hr = {70, 300, 72};
    rec.sc = {2.0, 2.0, 2.0};
    auto fixed = io::remove_artifacts(rec);
    CHECK(fixed.hr == std::vector<double>{70, 71, 72});

    rec.hr = {70, 71, 72};
    auto same = io::remove_artifacts(rec);
    CHECK(same.hr == rec.hr);

    rec.hr = {0, 0, 0};
    CHECK(code_of([&] { io::remove_artifacts(rec); }) == Errc::all_samples_invalid);
}

TEST_CASE("remove_artifacts repairs boundaries and NaN and is idempotent") {
    SubjectRecording rec;
    rec.sample_rate_hz = 1.0;
    rec.hr = {500, 80, std::nan(""), 90, 10};
    rec.sc = {-3, 1.0, 200.0, 2.0, 2.0};
    auto fixed = io::remove_artifacts(rec);
    CHECK(fixed.hr == std::vector<double>{80, 80, 85, 90, 90});
    CHECK(fixed.sc == std::vector<double>{1.0, 1.0, 1.5, 2.0, 2.0});
    auto twice = io::remove_artifacts(fixed);
    CHECK(twice.hr == fixed.hr);
    CHECK(twice.sc == fixed.sc);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        SubjectRecording r;
        r.sample_rate_hz = 10.0;
        std::uniform_real_distribution<double> hr(-50, 400), sc(-1, 150);
        for (int i = 0; i < 200; ++i) {
            r.hr.push_back(hr(rng));
            r.sc.push_back(sc(rng));
        }
        r.hr[50] = 80.0;  // guarantee one valid sample per channel
        r.sc[60] = 2.0;
        auto once = io::remove_artifacts(r);
        auto again = io::remove_artifacts(once);
        CHECK(once.hr == again.hr);
        CHECK(once.sc == again.sc);
        for (double v : once.hr) {
            CHECK(v >= io::kHrMinValid);
            CHECK(v <= io::kHrMaxValid);
        }
    }
}

TEST_CASE("manifest and span files round trip") {
    DatasetManifest m;
    m.name = "demo";
    m.sample_rate_hz = 10.0;
    m.label_mode = LabelMode::marker_derived;
    m.trial_template = {0, 1, 1, 0};
    m.subjects.push_back({"s01", "a.csv", "csv", ""});
    m.subjects.push_back({"s02", "b.csv", "csv", "b_spans.csv"});
    fs::path dir = fs::temp_directory_path() / "stress_io_tests";
    fs::create_directories(dir);
    auto mp = dir / "manifest.json";
    io::save_manifest(m, mp.string());
    auto loaded = io::load_manifest(mp.string());
    CHECK(loaded.name == "demo");
    CHECK(loaded.sample_rate_hz == 10.0);
    CHECK(loaded.label_mode == LabelMode::marker_derived);
    CHECK(loaded.trial_template == m.trial_template);
    REQUIRE(loaded.subjects.size() == 2);
    // Relative subject paths resolve against the manifest directory.
    CHECK(loaded.subjects[0].path == (dir / "a.csv").string());
    CHECK(loaded.subjects[1].spans_path == (dir / "b_spans.csv").string());

    std::vector<LabelSpan> spans{{0, 120, 0}, {120, 260.5, 1}};
    auto sp = dir / "spans.csv";
    io::save_spans(spans, sp.string());
    auto back = io::load_spans(sp.string());
    REQUIRE(back.size() == 2);
    CHECK(back[1].start_s == 120.0);
    CHECK(back[1].end_s == 260.5);
    CHECK(back[1].label == 1);
}

TEST_CASE("recording csv round trips including labels") {
    SubjectRecording rec;
    rec.subject_id = "s01";
    rec.sample_rate_hz = 10.0;
    rec.t0_s = 5.0;
    rec.hr = {70.25, 71.5, 70.125};
    rec.sc = {2.0, 2.125, 2.25};
    rec.labels = std::vector<int>{0, 1, 0};
    fs::path p = fs::temp_directory_path() / "stress_io_tests" / "rt.csv";
    fs::create_directories(p.parent_path());
    io::save_recording(rec, p.string());
    DatasetManifest m = manifest_at(10.0);
    auto back = io::load_recording(p.string(), m, "s01");
    CHECK(back.hr == rec.hr);
    CHECK(back.sc == rec.sc);
    CHECK(back.t0_s == 5.0);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == *rec.labels);
}
