#include "stress/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <future>
#include <random>

#include "stress/dataset_io.hpp"
#include "stress/error.hpp"

namespace stress::synth {

namespace {

namespace fs = std::filesystem;

void validate(const SynthConfig& cfg) {
    if (cfg.n_subjects < 1) raise(Errc::bad_config, "n_subjects must be >= 1");
    if (!(cfg.duration_s >= 240))
        raise(Errc::bad_config, "duration_s must be >= 240 to fit alternating 120 s spans");
    if (!(cfg.sample_rate_hz > 0)) raise(Errc::bad_config, "sample_rate_hz must be positive");
    if (cfg.subject_offset_std < 0 || cfg.stress_hr_delta < 0 || cfg.noise_std < 0)
        raise(Errc::bad_config, "spreads and deltas must be non-negative");
    if (!(cfg.stress_scr_rate_hz > 0) || !(cfg.baseline_scr_rate_hz > 0))
        raise(Errc::bad_config, "SCR rates must be positive");
}

// Mean-reverting noise; tau is the correlation time, sigma the stationary
// standard deviation.
struct OuProcess {
    double decay;
    double kick;
    double state = 0.0;

    OuProcess(double tau_s, double sigma, double dt)
        : decay(std::exp(-dt / tau_s)), kick(sigma * std::sqrt(1.0 - decay * decay)) {}

    double step(std::mt19937_64& rng) {
        std::normal_distribution<double> n(0.0, 1.0);
        state = state * decay + (kick > 0 ? kick * n(rng) : 0.0);
        return state;
    }
};

std::string subject_name(int index, int n_subjects) {
    int width = n_subjects >= 100 ? 3 : 2;
    std::string num = std::to_string(index + 1);
    while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
    return "s" + num;
}

}  // namespace

std::pair<SubjectRecording, std::vector<LabelSpan>> generate_subject(const SynthConfig& cfg,
                                                                     int subject_index) {
    validate(cfg);
    if (subject_index < 0 || subject_index >= cfg.n_subjects)
        raise(Errc::bad_config, "subject_index out of range");

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(subject_index), 0x5e5eu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double dt = 1.0 / cfg.sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s *
                                                                cfg.sample_rate_hz));

    // Which channel this subject expresses stress reliably in. Spread the
    // mix evenly across subjects: low u -> steady HR but noisy skin signal,
    // high u -> wandering HR but clean skin signal. Window-level statistics
    // look alike across the mix, so only a subject-aware model can pick the
    // right channel per person.
    const double u = (subject_index + 0.5) / cfg.n_subjects;

    const double hr_base = std::clamp(70.0 + cfg.subject_offset_std * gauss(rng), 45.0, 110.0);
    const double noise_scale = cfg.noise_std / 3.0;  // relative to the default scale
    const double hr_white_sigma = 0.4 * cfg.noise_std;
    const double hr_drift_sigma = cfg.noise_std * (0.4 + 2.4 * u);
    const double sc_base = std::clamp(2.0 + 0.3 * gauss(rng), 0.5, 5.0);
    const double sc_fast_sigma = (0.012 + 0.11 * (1.0 - u)) * noise_scale;  // masks SCR peaks
    const double sc_drift_sigma = (0.02 + 0.30 * (1.0 - u)) * noise_scale;  // swamps SC levels
    const double sc_white_sigma = 0.25 * sc_fast_sigma;

    // Alternating spans, each at least 120 s, starting at baseline.
    std::vector<LabelSpan> spans;
    double t = 0.0;
    int label = 0;
    while (t < cfg.duration_s) {
        double len = 120.0 + 60.0 * unit(rng);
        double end = t + len;
        if (cfg.duration_s - end < 120.0) end = cfg.duration_s;  // absorb the remainder
        spans.push_back({t, end, label});
        t = end;
        label = 1 - label;
    }

    OuProcess hr_drift(45.0, hr_drift_sigma, dt);
    OuProcess sc_fast(2.5, sc_fast_sigma, dt);
    OuProcess sc_drift(120.0, sc_drift_sigma, dt);
    // Burn-in so the processes start in their stationary distribution.
    for (int i = 0; i < 2000; ++i) {
        hr_drift.step(rng);
        sc_fast.step(rng);
        sc_drift.step(rng);
    }

    SubjectRecording rec;
    rec.subject_id = subject_name(subject_index, cfg.n_subjects);
    rec.sample_rate_hz = cfg.sample_rate_hz;
    rec.hr.resize(n);
    rec.sc.resize(n);
    rec.labels = std::vector<int>(n, 0);

    auto label_at = [&](double time_s) {
        for (const auto& s : spans)
            if (time_s >= s.start_s && time_s < s.end_s) return s.label;
        return spans.back().label;
    };

    // SCR events arrive as a Poisson process whose rate follows the span
    // label; each event adds an instantaneous rise with a 4 s exponential
    // decay and a trough-to-peak amplitude of at least 0.1 uS.
    const double scr_tau_s = 4.0;
    std::uniform_real_distribution<double> amp_dist(0.1, 0.4);
    double scr_level = 0.0;
    double next_event = 0.0;
    {
        double rate0 = label_at(0.0) == 1 ? cfg.stress_scr_rate_hz : cfg.baseline_scr_rate_hz;
        next_event = -std::log(1.0 - unit(rng)) / rate0;
    }

    const double scr_decay = std::exp(-dt / scr_tau_s);
    for (std::size_t i = 0; i < n; ++i) {
        const double time_s = static_cast<double>(i) * dt;
        const int lab = label_at(time_s);
        (*rec.labels)[i] = lab;

        scr_level *= scr_decay;
        while (time_s >= next_event) {
            scr_level += amp_dist(rng);
            double rate = lab == 1 ? cfg.stress_scr_rate_hz : cfg.baseline_scr_rate_hz;
            next_event += -std::log(1.0 - unit(rng)) / rate;
        }

        double hr = hr_base + (lab == 1 ? cfg.stress_hr_delta : 0.0) + hr_drift.step(rng) +
                    hr_white_sigma * gauss(rng);
        rec.hr[i] = std::clamp(hr, io::kHrMinValid, io::kHrMaxValid);

        double sc = sc_base + scr_level + sc_fast.step(rng) + sc_drift.step(rng) +
                    sc_white_sigma * gauss(rng);
        rec.sc[i] = std::clamp(sc, io::kScMinValid, io::kScMaxValid);
    }
    return {std::move(rec), std::move(spans)};
}

std::string generate_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs) {
    validate(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise(Errc::io_error, out_dir + ": " + ec.message());

    DatasetManifest manifest;
    manifest.name = cfg.name;
    manifest.sample_rate_hz = cfg.sample_rate_hz;
    manifest.label_mode = LabelMode::span_file;

    struct Generated {
        SubjectRecording rec;
        std::vector<LabelSpan> spans;
    };
    std::vector<Generated> results(static_cast<std::size_t>(cfg.n_subjects));

    const int workers = std::max(1, jobs);
    std::vector<std::future<void>> futures;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&]() {
            for (int i = next.fetch_add(1); i < cfg.n_subjects; i = next.fetch_add(1)) {
                auto [rec, spans] = generate_subject(cfg, i);
                results[static_cast<std::size_t>(i)] = {std::move(rec), std::move(spans)};
            }
        }));
    }
    for (auto& f : futures) f.get();

    for (int i = 0; i < cfg.n_subjects; ++i) {
        const auto& g = results[static_cast<std::size_t>(i)];
        const std::string id = g.rec.subject_id;
        const std::string rec_name = id + "_recording.csv";
        const std::string span_name = id + "_spans.csv";
        io::save_recording(g.rec, (fs::path(out_dir) / rec_name).string());
        io::save_spans(g.spans, (fs::path(out_dir) / span_name).string());
        manifest.subjects.push_back({id, rec_name, "csv", span_name});
    }

    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    io::save_manifest(manifest, manifest_path);
    return manifest_path;
}

}  // namespace stress::synth
