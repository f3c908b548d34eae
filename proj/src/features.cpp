#include "stress/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stress/dataset_io.hpp"
#include "stress/error.hpp"
#include "stress/text.hpp"

namespace stress::feat {

namespace {

double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double pop_std(const std::vector<double>& x, double mean) {
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

std::vector<Window> slide_windows(const SubjectRecording& rec,
                                  const std::vector<LabelSpan>& spans, double window_len_s,
                                  double step_s) {
    if (!(window_len_s > 0) || !(step_s > 0) || step_s > window_len_s)
        raise(Errc::bad_window_params,
              "need window_len_s > 0 and 0 < step_s <= window_len_s");

    const double rate = rec.sample_rate_hz;
    const double t_end = rec.t0_s + static_cast<double>(rec.size()) / rate;
    std::vector<int> derived;
    const std::vector<int>* labels = nullptr;
    if (!spans.empty()) {
        derived = io::labels_from_spans(rec, spans);
        labels = &derived;
    } else if (rec.labels) {
        labels = &*rec.labels;
    } else {
        derived.assign(rec.size(), kUnlabeled);
        labels = &derived;
    }

    std::vector<Window> out;
    for (std::size_t k = 0;; ++k) {
        double start = rec.t0_s + static_cast<double>(k) * step_s;
        if (start + window_len_s > t_end + 1e-9) break;

        // Window boundaries in seconds, mapped to samples as t in [start, start+len).
        auto to_index = [&](double t) {
            return static_cast<std::size_t>(std::ceil((t - rec.t0_s) * rate - 1e-9));
        };
        Window w;
        w.begin = to_index(start);
        w.end = std::min(to_index(start + window_len_s), rec.size());
        w.start_s = start;
        if (w.end <= w.begin) break;

        std::size_t zeros = 0, ones = 0;
        for (std::size_t i = w.begin; i < w.end; ++i) {
            if ((*labels)[i] == 0) ++zeros;
            else if ((*labels)[i] == 1) ++ones;
        }
        if (zeros == ones) {
            w.dropped = true;  // exact tie, includes fully unlabeled windows
        } else {
            w.label = ones > zeros ? 1 : 0;
        }
        out.push_back(w);
    }
    return out;
}

std::array<double, 7> hr_features(const std::vector<double>& hr_window) {
    if (hr_window.size() < 2)
        raise(Errc::insufficient_samples,
              "hr window has " + std::to_string(hr_window.size()) + " samples, need >= 2");

    const double mean = mean_of(hr_window);
    const double sd = pop_std(hr_window, mean);
    const auto [mn_it, mx_it] = std::minmax_element(hr_window.begin(), hr_window.end());
    const double mn = *mn_it, mx = *mx_it;

    std::vector<double> diffs(hr_window.size() - 1);
    for (std::size_t i = 0; i + 1 < hr_window.size(); ++i)
        diffs[i] = hr_window[i + 1] - hr_window[i];
    double sq = 0.0;
    for (double d : diffs) sq += d * d;
    const double rmssd = std::sqrt(sq / static_cast<double>(diffs.size()));
    const double sdsd = pop_std(diffs, mean_of(diffs));

    return {mean, sd, mn, mx, mx - mn, rmssd, sdsd};
}

std::pair<int, double> count_sc_peaks(const std::vector<double>& sc_window,
                                      double /*sample_rate_hz*/) {
    if (sc_window.size() < 3)
        raise(Errc::insufficient_samples, "sc window too short for peak detection");

    int count = 0;
    double amp_sum = 0.0;
    double trough = sc_window.front();  // running minimum since the last counted peak
    for (std::size_t i = 1; i + 1 < sc_window.size(); ++i) {
        bool is_max = sc_window[i] > sc_window[i - 1] && sc_window[i] >= sc_window[i + 1];
        if (is_max) {
            double rise = sc_window[i] - trough;
            if (rise >= kScrMinRiseUs) {
                ++count;
                amp_sum += rise;
                trough = sc_window[i];
            }
        }
        trough = std::min(trough, sc_window[i]);
    }
    return {count, count > 0 ? amp_sum / count : 0.0};
}

std::array<double, 9> sc_features(const std::vector<double>& sc_window, double sample_rate_hz) {
    if (sc_window.size() < 4)
        raise(Errc::insufficient_samples,
              "sc window has " + std::to_string(sc_window.size()) + " samples, need >= 4");

    const double n = static_cast<double>(sc_window.size());
    const double mean = mean_of(sc_window);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sc_window) {
        double d = v - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    const auto [mn_it, mx_it] = std::minmax_element(sc_window.begin(), sc_window.end());
    const double mn = *mn_it, mx = *mx_it;
    auto [peaks, amplitude] = count_sc_peaks(sc_window, sample_rate_hz);

    double skew = 0.0, kurt = 0.0;
    if (m2 >= 1e-12) {
        skew = m3 / std::pow(m2, 1.5);
        kurt = m4 / (m2 * m2) - 3.0;
    }
    return {mean, std::sqrt(m2), mn, mx, mx - mn, static_cast<double>(peaks), amplitude,
            skew, kurt};
}

std::vector<FeatureVector> featurize_subject(const SubjectRecording& rec,
                                             const std::vector<LabelSpan>& spans,
                                             double window_len_s, double step_s,
                                             std::size_t* dropped_count) {
    auto windows = slide_windows(rec, spans, window_len_s, step_s);
    std::vector<FeatureVector> out;
    std::size_t dropped = 0;
    for (const auto& w : windows) {
        if (w.dropped) {
            ++dropped;
            continue;
        }
        std::vector<double> hr(rec.hr.begin() + static_cast<std::ptrdiff_t>(w.begin),
                               rec.hr.begin() + static_cast<std::ptrdiff_t>(w.end));
        std::vector<double> sc(rec.sc.begin() + static_cast<std::ptrdiff_t>(w.begin),
                               rec.sc.begin() + static_cast<std::ptrdiff_t>(w.end));
        auto h = hr_features(hr);
        auto s = sc_features(sc, rec.sample_rate_hz);

        FeatureVector fv;
        for (int i = 0; i < 7; ++i) fv.values[i] = h[i];
        for (int i = 0; i < 9; ++i) fv.values[7 + i] = s[i];
        fv.label = w.label;
        fv.subject_id = rec.subject_id;
        fv.window_start_s = w.start_s;
        out.push_back(std::move(fv));
    }
    if (dropped_count) *dropped_count = dropped;
    return out;
}

std::pair<WindowedDataset, BaselineStats> baseline_normalize(const WindowedDataset& ds) {
    if (ds.normalized) raise(Errc::already_normalized, "dataset already normalized");

    WindowedDataset out = ds;
    BaselineStats stats;
    for (std::size_t s = 0; s < ds.n_subjects(); ++s) {
        std::array<double, kFeatureDim> mean{};
        std::size_t n_baseline = 0;
        for (const auto& w : ds.windows[s]) {
            if (w.label != 0) continue;
            ++n_baseline;
            for (int f = 0; f < kFeatureDim; ++f) mean[f] += w.values[f];
        }
        if (n_baseline == 0)
            raise(Errc::no_baseline_windows, ds.subject_ids[s]);
        for (int f = 0; f < kFeatureDim; ++f) mean[f] /= static_cast<double>(n_baseline);

        for (auto& w : out.windows[s])
            for (int f = 0; f < kFeatureDim; ++f) w.values[f] -= mean[f];

        stats.subject_ids.push_back(ds.subject_ids[s]);
        stats.means.push_back(mean);
    }
    out.normalized = true;
    return {std::move(out), std::move(stats)};
}

void save_features(const WindowedDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << "subject_id,window_start_s,label";
    for (int f = 0; f < kFeatureDim; ++f) {
        out << ",f" << (f < 10 ? "0" : "") << f;
    }
    out << '\n';
    for (std::size_t s = 0; s < ds.n_subjects(); ++s) {
        for (const auto& w : ds.windows[s]) {
            out << w.subject_id << ',' << text::format_double(w.window_start_s) << ','
                << w.label;
            for (int f = 0; f < kFeatureDim; ++f)
                out << ',' << text::format_double(w.values[f]);
            out << '\n';
        }
    }
}

WindowedDataset load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) raise(Errc::empty_file, path);

    WindowedDataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        auto cells = text::split_csv(line);
        if (cells.size() != 3 + kFeatureDim)
            raise(Errc::malformed_row, "row " + std::to_string(row) + " in " + path);
        FeatureVector fv;
        fv.subject_id = text::trim(cells[0]);
        auto start = text::parse_double(cells[1]);
        auto label = text::parse_double(cells[2]);
        if (!start || !label || (*label != 0.0 && *label != 1.0))
            raise(Errc::malformed_row, "row " + std::to_string(row) + " in " + path);
        fv.window_start_s = *start;
        fv.label = static_cast<int>(*label);
        for (int f = 0; f < kFeatureDim; ++f) {
            auto v = text::parse_double(cells[3 + f]);
            if (!v) raise(Errc::malformed_row, "row " + std::to_string(row) + " in " + path);
            fv.values[f] = *v;
        }
        int idx = ds.subject_index(fv.subject_id);
        if (idx < 0) {
            ds.subject_ids.push_back(fv.subject_id);
            ds.windows.emplace_back();
            idx = static_cast<int>(ds.subject_ids.size()) - 1;
        }
        ds.windows[static_cast<std::size_t>(idx)].push_back(std::move(fv));
    }
    return ds;
}

void save_baseline_stats(const BaselineStats& stats, const std::string& path) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t s = 0; s < stats.subject_ids.size(); ++s)
        j[stats.subject_ids[s]] = stats.means[s];
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << j.dump(2) << '\n';
}

BaselineStats load_baseline_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    nlohmann::json j;
    in >> j;
    BaselineStats stats;
    for (auto it = j.begin(); it != j.end(); ++it) {
        stats.subject_ids.push_back(it.key());
        std::array<double, kFeatureDim> m{};
        auto arr = it.value().get<std::vector<double>>();
        if (arr.size() != kFeatureDim)
            raise(Errc::io_error, path + ": wrong stats arity for " + it.key());
        std::copy(arr.begin(), arr.end(), m.begin());
        stats.means.push_back(m);
    }
    return stats;
}

}  // namespace stress::feat
