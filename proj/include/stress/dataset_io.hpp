#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stress/types.hpp"

namespace stress::io {

// Loads a recording CSV (header t,hr,sc[,marker][,label]) and brings all
// channels to the manifest sample rate. The file's native rate is inferred
// from the t column; channels at a lower rate are upsampled, a higher rate
// is rejected.
SubjectRecording load_recording(const std::string& path, const DatasetManifest& manifest,
                                const std::string& subject_id);

// Linear-interpolation upsampling. Output length = round(n * to_hz/from_hz);
// positions past the last input sample hold its value.
std::vector<double> upsample_channel(const std::vector<double>& x, double from_hz, double to_hz);

// Same resampling for integer label channels, using nearest-sample hold.
std::vector<int> upsample_labels(const std::vector<int>& x, double from_hz, double to_hz);

// Indices of local maxima above mean + 3*std of the channel, at least 30 s
// apart, ascending. Empty result when nothing crosses the threshold.
std::vector<std::size_t> detect_marker_peaks(const std::vector<double>& marker,
                                             double sample_rate_hz);

// Drops samples outside [first_peak, last_peak), assigns segment labels from
// the trial template, and removes the 240 s ambiguity buffers where rest
// meets driving. Spans are on the same clock as the returned recording.
std::pair<SubjectRecording, std::vector<LabelSpan>> trim_and_label(
    const SubjectRecording& rec, const std::vector<std::size_t>& peaks,
    const std::vector<int>& trial_template);

// Replaces HR samples outside [30, 220] bpm and SC samples outside
// [0.01, 100] uS (or non-finite) by linear interpolation between the nearest
// in-range neighbors; boundary runs take the nearest in-range value.
SubjectRecording remove_artifacts(const SubjectRecording& rec);

inline constexpr double kHrMinValid = 30.0;
inline constexpr double kHrMaxValid = 220.0;
inline constexpr double kScMinValid = 0.01;
inline constexpr double kScMaxValid = 100.0;
inline constexpr double kAmbiguityBufferS = 240.0;

// Manifest JSON and span-file CSV round trips.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);
std::vector<LabelSpan> load_spans(const std::string& path);
void save_spans(const std::vector<LabelSpan>& spans, const std::string& path);

// Writes a recording in the canonical CSV layout.
void save_recording(const SubjectRecording& rec, const std::string& path);

// Applies per-sample labels derived from spans (samples outside every span
// get kUnlabeled).
std::vector<int> labels_from_spans(const SubjectRecording& rec,
                                   const std::vector<LabelSpan>& spans);

// Full per-subject preprocessing: load, artifact removal, and label-span
// derivation according to the manifest's label mode.
std::pair<SubjectRecording, std::vector<LabelSpan>> load_and_prepare(
    const DatasetManifest& manifest, const ManifestSubject& subject);

}  // namespace stress::io
