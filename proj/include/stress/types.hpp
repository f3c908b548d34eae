#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stress {

// Per-sample label value used in recordings. Samples outside any labeled
// span carry kUnlabeled.
inline constexpr int kUnlabeled = -1;

// One subject's aligned physiological channels. All present channels have
// the same length once loaded; sample i sits at time t0_s + i / sample_rate_hz.
struct SubjectRecording {
    std::string subject_id;
    double sample_rate_hz = 0.0;
    std::vector<double> hr;  // beats/min
    std::vector<double> sc;  // microsiemens
    std::optional<std::vector<double>> marker;
    std::optional<std::vector<int>> labels;  // 0, 1 or kUnlabeled per sample
    double t0_s = 0.0;

    std::size_t size() const { return hr.size(); }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(hr.size()) / sample_rate_hz : 0.0;
    }
};

// Half-open labeled time interval [start_s, end_s) on the recording's clock.
struct LabelSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    int label = 0;  // 0 = baseline/rest, 1 = stress
};

enum class LabelMode { marker_derived, span_file };

struct ManifestSubject {
    std::string subject_id;
    std::string path;          // recording CSV
    std::string format = "csv";
    std::string spans_path;    // span CSV, used in span_file mode
};

struct DatasetManifest {
    std::string name;
    double sample_rate_hz = 0.0;
    LabelMode label_mode = LabelMode::span_file;
    std::vector<int> trial_template;  // per-segment labels for marker mode
    std::vector<ManifestSubject> subjects;
};

// The canonical 16-feature order. Indices are used when serializing and when
// normalizing, so the order is part of the file format.
inline constexpr int kFeatureDim = 16;
inline constexpr std::array<const char*, kFeatureDim> kFeatureNames = {
    "hr_mean", "hr_std",  "hr_min",       "hr_max",       "hr_range",   "hr_rmssd",
    "hr_sdsd", "sc_mean", "sc_std",       "sc_min",       "sc_max",     "sc_range",
    "sc_num_peaks", "sc_amplitude", "sc_skewness", "sc_kurtosis"};

struct FeatureVector {
    std::array<double, kFeatureDim> values{};
    int label = 0;  // binary
    std::string subject_id;
    double window_start_s = 0.0;
};

struct WindowedDataset {
    // Windows grouped per subject, subjects kept in insertion order.
    std::vector<std::string> subject_ids;
    std::vector<std::vector<FeatureVector>> windows;  // parallel to subject_ids
    double window_len_s = 30.0;
    double step_s = 15.0;
    bool normalized = false;

    std::size_t n_subjects() const { return subject_ids.size(); }
    std::size_t total_windows() const {
        std::size_t n = 0;
        for (const auto& w : windows) n += w.size();
        return n;
    }
    int subject_index(const std::string& id) const {
        for (std::size_t i = 0; i < subject_ids.size(); ++i)
            if (subject_ids[i] == id) return static_cast<int>(i);
        return -1;
    }
};

// Per-subject mean of each feature over that subject's baseline (label 0)
// windows; subtracted during normalization.
struct BaselineStats {
    std::vector<std::string> subject_ids;
    std::vector<std::array<double, kFeatureDim>> means;  // parallel to subject_ids
};

}  // namespace stress
