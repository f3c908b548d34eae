#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stress/types.hpp"

namespace stress::synth {

struct SynthConfig {
    int n_subjects = 10;
    double duration_s = 1500.0;
    double sample_rate_hz = 10.0;
    std::uint64_t seed = 0;
    double subject_offset_std = 8.0;   // per-subject resting HR spread, bpm
    double stress_hr_delta = 10.0;     // bpm added to HR during stress spans
    double stress_scr_rate_hz = 0.2;   // SCR event rate under stress
    double baseline_scr_rate_hz = 0.05;
    double noise_std = 3.0;            // master noise scale, bpm
    std::string name = "synth";
};

// One subject's recording plus its alternating baseline/stress spans. The
// RNG substream depends only on (cfg.seed, subject_index), so subjects can
// be generated in any order or in parallel.
std::pair<SubjectRecording, std::vector<LabelSpan>> generate_subject(const SynthConfig& cfg,
                                                                     int subject_index);

// Writes one recording CSV and one span CSV per subject plus a manifest
// loadable by the dataset loader; returns the manifest path.
std::string generate_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs = 1);

}  // namespace stress::synth
