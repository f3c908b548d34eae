#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "stress/types.hpp"

namespace stress::feat {

inline constexpr double kDefaultWindowLenS = 30.0;
inline constexpr double kDefaultStepS = 15.0;
inline constexpr double kScrMinRiseUs = 0.05;

// One candidate window: the half-open sample range [begin, end) and the mode
// of the per-sample labels inside it. An exact 50/50 tie marks the window
// dropped and no features are computed for it.
struct Window {
    std::size_t begin = 0;
    std::size_t end = 0;
    double start_s = 0.0;
    int label = 0;
    bool dropped = false;
};

std::vector<Window> slide_windows(const SubjectRecording& rec,
                                  const std::vector<LabelSpan>& spans, double window_len_s,
                                  double step_s);

// [mean, std, min, max, range, rmssd, sdsd], population std convention.
std::array<double, 7> hr_features(const std::vector<double>& hr_window);

// [mean, std, min, max, range, num_peaks, mean_amplitude, skewness, kurtosis]
// with excess kurtosis; skewness/kurtosis are 0 on (near-)constant windows.
std::array<double, 9> sc_features(const std::vector<double>& sc_window, double sample_rate_hz);

// SCR detection: a local maximum counts as a peak when it rises at least
// 0.05 uS above the preceding trough; amplitude is that trough-to-peak rise.
std::pair<int, double> count_sc_peaks(const std::vector<double>& sc_window,
                                      double sample_rate_hz);

// Full featurization of one prepared subject recording.
std::vector<FeatureVector> featurize_subject(const SubjectRecording& rec,
                                             const std::vector<LabelSpan>& spans,
                                             double window_len_s, double step_s,
                                             std::size_t* dropped_count = nullptr);

// Subtracts each subject's mean over its label-0 windows from every window,
// feature by feature.
std::pair<WindowedDataset, BaselineStats> baseline_normalize(const WindowedDataset& ds);

// Feature CSV (header subject_id,window_start_s,label,f00..f15) and baseline
// stats JSON round trips.
void save_features(const WindowedDataset& ds, const std::string& path);
WindowedDataset load_features(const std::string& path);
void save_baseline_stats(const BaselineStats& stats, const std::string& path);
BaselineStats load_baseline_stats(const std::string& path);

}  // namespace stress::feat
