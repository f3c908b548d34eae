#include "stress/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stress/error.hpp"
#include "stress/text.hpp"

namespace stress {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::missing_channel: return "MissingChannel";
        case Errc::malformed_row: return "MalformedRow";
        case Errc::empty_file: return "EmptyFile";
        case Errc::bad_rate: return "BadRate";
        case Errc::too_few_markers: return "TooFewMarkers";
        case Errc::all_samples_invalid: return "AllSamplesInvalid";
        case Errc::bad_window_params: return "BadWindowParams";
        case Errc::insufficient_samples: return "InsufficientSamples";
        case Errc::no_baseline_windows: return "NoBaselineWindows";
        case Errc::already_normalized: return "AlreadyNormalized";
        case Errc::unknown_task: return "UnknownTask";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::task_too_small: return "TaskTooSmall";
        case Errc::non_finite_loss: return "NonFiniteLoss";
        case Errc::single_class_data: return "SingleClassData";
        case Errc::no_convergence: return "NoConvergence";
        case Errc::dim_mismatch: return "DimMismatch";
        case Errc::untrained_model: return "UntrainedModel";
        case Errc::subject_too_small: return "SubjectTooSmall";
        case Errc::empty_matrix: return "EmptyMatrix";
        case Errc::task_missing_head: return "TaskMissingHead";
        case Errc::unsupported_format: return "UnsupportedFormat";
        case Errc::bad_config: return "BadConfig";
        case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

}  // namespace stress

namespace stress::io {

namespace {

using nlohmann::json;

struct CsvColumns {
    int t = -1, hr = -1, sc = -1, marker = -1, label = -1;
};

CsvColumns resolve_header(const std::vector<std::string>& cells, const std::string& path) {
    CsvColumns cols;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string name = text::trim(cells[i]);
        int idx = static_cast<int>(i);
        if (name == "t") cols.t = idx;
        else if (name == "hr") cols.hr = idx;
        else if (name == "sc") cols.sc = idx;
        else if (name == "marker") cols.marker = idx;
        else if (name == "label") cols.label = idx;
    }
    if (cols.t < 0) raise(Errc::missing_channel, "column 't' absent in " + path);
    if (cols.hr < 0) raise(Errc::missing_channel, "column 'hr' absent in " + path);
    if (cols.sc < 0) raise(Errc::missing_channel, "column 'sc' absent in " + path);
    return cols;
}

double cell_value(const std::vector<std::string>& cells, int col, std::size_t row,
                  const std::string& path) {
    if (col >= static_cast<int>(cells.size()))
        raise(Errc::malformed_row, "row " + std::to_string(row) + " too short in " + path);
    auto v = text::parse_double(cells[col]);
    if (!v || !std::isfinite(*v))
        raise(Errc::malformed_row,
              "row " + std::to_string(row) + " column " + std::to_string(col) +
                  " not numeric in " + path);
    return *v;
}

// Native rate from the median spacing of the t column.
double infer_rate(const std::vector<double>& t) {
    if (t.size() < 2) return 0.0;
    std::vector<double> dt(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) dt[i] = t[i + 1] - t[i];
    std::nth_element(dt.begin(), dt.begin() + dt.size() / 2, dt.end());
    double med = dt[dt.size() / 2];
    return med > 0 ? 1.0 / med : 0.0;
}

}  // namespace

std::vector<double> upsample_channel(const std::vector<double>& x, double from_hz, double to_hz) {
    if (from_hz <= 0 || to_hz <= 0)
        raise(Errc::bad_rate, "rates must be positive");
    if (from_hz > to_hz)
        raise(Errc::bad_rate, "from_hz " + text::format_double(from_hz) + " exceeds to_hz " +
                                  text::format_double(to_hz));
    if (x.empty()) throw std::invalid_argument("upsample_channel: empty input");
    if (from_hz == to_hz) return x;

    std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * to_hz / from_hz));
    std::vector<double> out(out_len);
    double ratio = from_hz / to_hz;
    for (std::size_t i = 0; i < out_len; ++i) {
        double pos = static_cast<double>(i) * ratio;
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= x.size()) {
            out[i] = x.back();  // hold past the last original sample
        } else {
            double frac = pos - static_cast<double>(lo);
            out[i] = x[lo] + frac * (x[lo + 1] - x[lo]);
        }
    }
    return out;
}

std::vector<int> upsample_labels(const std::vector<int>& x, double from_hz, double to_hz) {
    if (from_hz <= 0 || to_hz <= 0) raise(Errc::bad_rate, "rates must be positive");
    if (from_hz > to_hz) raise(Errc::bad_rate, "from_hz exceeds to_hz");
    if (from_hz == to_hz) return x;
    std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * to_hz / from_hz));
    std::vector<int> out(out_len);
    double ratio = from_hz / to_hz;
    for (std::size_t i = 0; i < out_len; ++i) {
        std::size_t lo = std::min(static_cast<std::size_t>(static_cast<double>(i) * ratio),
                                  x.size() - 1);
        out[i] = x[lo];
    }
    return out;
}

SubjectRecording load_recording(const std::string& path, const DatasetManifest& manifest,
                                const std::string& subject_id) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || text::trim(line).empty())
        raise(Errc::empty_file, path);
    CsvColumns cols = resolve_header(text::split_csv(line), path);

    std::vector<double> t, hr, sc, marker;
    std::vector<int> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        auto cells = text::split_csv(line);
        t.push_back(cell_value(cells, cols.t, row, path));
        hr.push_back(cell_value(cells, cols.hr, row, path));
        sc.push_back(cell_value(cells, cols.sc, row, path));
        if (cols.marker >= 0) marker.push_back(cell_value(cells, cols.marker, row, path));
        if (cols.label >= 0) {
            double v = cell_value(cells, cols.label, row, path);
            labels.push_back(v == 0.0 ? 0 : v == 1.0 ? 1 : kUnlabeled);
        }
    }
    if (t.empty()) raise(Errc::empty_file, path + " has a header but no rows");
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        if (t[i + 1] <= t[i])
            raise(Errc::malformed_row,
                  "row " + std::to_string(i + 2) + ": t not increasing in " + path);

    SubjectRecording rec;
    rec.subject_id = subject_id;
    rec.sample_rate_hz = manifest.sample_rate_hz;
    rec.t0_s = t.front();
    rec.hr = std::move(hr);
    rec.sc = std::move(sc);
    if (cols.marker >= 0) rec.marker = std::move(marker);
    if (cols.label >= 0) rec.labels = std::move(labels);

    double native = t.size() >= 2 ? infer_rate(t) : manifest.sample_rate_hz;
    double target = manifest.sample_rate_hz;
    if (native > 0 && std::abs(native - target) > 1e-6 * target) {
        if (native > target)
            raise(Errc::bad_rate, path + " sampled above the manifest rate");
        rec.hr = upsample_channel(rec.hr, native, target);
        rec.sc = upsample_channel(rec.sc, native, target);
        if (rec.marker) rec.marker = upsample_channel(*rec.marker, native, target);
        if (rec.labels) rec.labels = upsample_labels(*rec.labels, native, target);
    }
    return rec;
}

std::vector<std::size_t> detect_marker_peaks(const std::vector<double>& marker,
                                             double sample_rate_hz) {
    if (marker.empty()) throw std::invalid_argument("detect_marker_peaks: empty channel");
    const std::size_t n = marker.size();
    double mean = 0.0;
    for (double v : marker) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : marker) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double threshold = mean + 3.0 * std::sqrt(var);

    const std::size_t min_gap =
        static_cast<std::size_t>(std::ceil(30.0 * sample_rate_hz - 1e-9));
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        if (marker[i] <= threshold) continue;
        bool rising = (i == 0) || marker[i] > marker[i - 1];
        bool falling = (i + 1 == n) || marker[i] >= marker[i + 1];
        if (!rising || !falling) continue;
        if (!peaks.empty() && i - peaks.back() < min_gap) continue;
        peaks.push_back(i);
    }
    return peaks;
}

std::pair<SubjectRecording, std::vector<LabelSpan>> trim_and_label(
    const SubjectRecording& rec, const std::vector<std::size_t>& peaks,
    const std::vector<int>& trial_template) {
    if (peaks.size() < 2)
        raise(Errc::too_few_markers, "need at least 2 marker peaks, got " +
                                         std::to_string(peaks.size()));
    const double rate = rec.sample_rate_hz;
    const std::size_t first = peaks.front();
    const std::size_t last = peaks.back();

    // Keep [first, last): everything before the first press and from the
    // final press onward was recorded while subjects were being equipped.
    SubjectRecording out;
    out.subject_id = rec.subject_id;
    out.sample_rate_hz = rate;
    out.t0_s = rec.t0_s + static_cast<double>(first) / rate;
    auto slice = [&](const std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                                   v.begin() + static_cast<std::ptrdiff_t>(last));
    };
    out.hr = slice(rec.hr);
    out.sc = slice(rec.sc);
    if (rec.marker) out.marker = slice(*rec.marker);

    const std::size_t n_segments =
        std::min(peaks.size() - 1, trial_template.size());
    std::vector<LabelSpan> spans;
    for (std::size_t s = 0; s < n_segments; ++s) {
        double seg_start = rec.t0_s + static_cast<double>(peaks[s]) / rate;
        double seg_end = rec.t0_s + static_cast<double>(peaks[s + 1]) / rate;
        int label = trial_template[s];

        if (label == 0) {
            bool precedes_drive =
                s + 1 < n_segments && trial_template[s + 1] == 1;
            bool final_rest_after_drive =
                s + 1 == peaks.size() - 1 && s > 0 && trial_template[s - 1] == 1;
            if (precedes_drive) seg_end -= kAmbiguityBufferS;
            if (final_rest_after_drive) seg_start += kAmbiguityBufferS;
        }
        if (seg_end - seg_start <= 0) continue;  // buffer swallowed the segment
        spans.push_back({seg_start, seg_end, label});
    }

    out.labels = labels_from_spans(out, spans);
    return {std::move(out), std::move(spans)};
}

std::vector<int> labels_from_spans(const SubjectRecording& rec,
                                   const std::vector<LabelSpan>& spans) {
    std::vector<int> labels(rec.size(), kUnlabeled);
    for (const auto& span : spans) {
        // Sample i is inside the span when start <= t_i < end.
        double lo = (span.start_s - rec.t0_s) * rec.sample_rate_hz;
        double hi = (span.end_s - rec.t0_s) * rec.sample_rate_hz;
        std::size_t i0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo - 1e-9)));
        std::size_t i1 = static_cast<std::size_t>(
            std::max(0.0, std::ceil(hi - 1e-9)));
        i1 = std::min<std::size_t>(i1, labels.size());
        for (std::size_t i = i0; i < i1; ++i) labels[i] = span.label;
    }
    return labels;
}

namespace {

void repair_channel(std::vector<double>& x, double lo, double hi, const char* name) {
    const std::size_t n = x.size();
    auto valid = [&](double v) { return std::isfinite(v) && v >= lo && v <= hi; };

    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < n; ++i)
        if (valid(x[i])) good.push_back(i);
    if (good.empty())
        raise(Errc::all_samples_invalid, std::string(name) + " channel entirely out of range");
    if (good.size() == n) return;

    std::vector<double> repaired = x;
    // Leading and trailing runs take the nearest in-range value.
    for (std::size_t i = 0; i < good.front(); ++i) repaired[i] = x[good.front()];
    for (std::size_t i = good.back() + 1; i < n; ++i) repaired[i] = x[good.back()];
    // Interior runs are bridged linearly between their in-range neighbors.
    for (std::size_t g = 0; g + 1 < good.size(); ++g) {
        std::size_t a = good[g], b = good[g + 1];
        if (b == a + 1) continue;
        double span = static_cast<double>(b - a);
        for (std::size_t i = a + 1; i < b; ++i) {
            double frac = static_cast<double>(i - a) / span;
            repaired[i] = x[a] + frac * (x[b] - x[a]);
        }
    }
    x = std::move(repaired);
}

}  // namespace

SubjectRecording remove_artifacts(const SubjectRecording& rec) {
    SubjectRecording out = rec;
    repair_channel(out.hr, kHrMinValid, kHrMaxValid, "hr");
    repair_channel(out.sc, kScMinValid, kScMaxValid, "sc");
    return out;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::io_error, path + ": " + e.what());
    }
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    std::string mode = j.at("label_mode").get<std::string>();
    if (mode == "marker-derived") m.label_mode = LabelMode::marker_derived;
    else if (mode == "span-file") m.label_mode = LabelMode::span_file;
    else raise(Errc::io_error, path + ": unknown label_mode '" + mode + "'");
    if (j.contains("trial_template"))
        m.trial_template = j.at("trial_template").get<std::vector<int>>();
    // Relative subject paths are taken relative to the manifest's directory,
    // so a generated dataset stays relocatable.
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (base / p).string();
    };
    for (const auto& js : j.at("subjects")) {
        ManifestSubject s;
        s.subject_id = js.at("subject_id").get<std::string>();
        s.path = resolve(js.at("path").get<std::string>());
        if (js.contains("format")) s.format = js.at("format").get<std::string>();
        if (js.contains("spans")) s.spans_path = resolve(js.at("spans").get<std::string>());
        m.subjects.push_back(std::move(s));
    }
    if (m.subjects.empty()) raise(Errc::io_error, path + ": manifest lists no subjects");
    for (std::size_t i = 0; i < m.subjects.size(); ++i)
        for (std::size_t k = i + 1; k < m.subjects.size(); ++k)
            if (m.subjects[i].subject_id == m.subjects[k].subject_id)
                raise(Errc::io_error,
                      path + ": duplicate subject_id " + m.subjects[i].subject_id);
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    json j;
    j["name"] = manifest.name;
    j["sample_rate_hz"] = manifest.sample_rate_hz;
    j["label_mode"] =
        manifest.label_mode == LabelMode::marker_derived ? "marker-derived" : "span-file";
    j["trial_template"] = manifest.trial_template;
    j["subjects"] = json::array();
    for (const auto& s : manifest.subjects) {
        json js;
        js["subject_id"] = s.subject_id;
        js["path"] = s.path;
        js["format"] = s.format;
        if (!s.spans_path.empty()) js["spans"] = s.spans_path;
        j["subjects"].push_back(js);
    }
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<LabelSpan> load_spans(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) raise(Errc::empty_file, path);
    std::vector<LabelSpan> spans;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        auto cells = text::split_csv(line);
        if (cells.size() < 3)
            raise(Errc::malformed_row, "row " + std::to_string(row) + " in " + path);
        auto s = text::parse_double(cells[0]);
        auto e = text::parse_double(cells[1]);
        auto l = text::parse_double(cells[2]);
        if (!s || !e || !l || (*l != 0.0 && *l != 1.0) || !(*s < *e))
            raise(Errc::malformed_row, "row " + std::to_string(row) + " in " + path);
        spans.push_back({*s, *e, static_cast<int>(*l)});
    }
    return spans;
}

void save_spans(const std::vector<LabelSpan>& spans, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << "start_s,end_s,label\n";
    for (const auto& s : spans)
        out << text::format_double(s.start_s) << ',' << text::format_double(s.end_s) << ','
            << s.label << '\n';
}

void save_recording(const SubjectRecording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << "t,hr,sc";
    if (rec.marker) out << ",marker";
    if (rec.labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < rec.size(); ++i) {
        double t = rec.t0_s + static_cast<double>(i) / rec.sample_rate_hz;
        out << text::format_double(t) << ',' << text::format_double(rec.hr[i]) << ','
            << text::format_double(rec.sc[i]);
        if (rec.marker) out << ',' << text::format_double((*rec.marker)[i]);
        if (rec.labels) out << ',' << (*rec.labels)[i];
        out << '\n';
    }
}

std::pair<SubjectRecording, std::vector<LabelSpan>> load_and_prepare(
    const DatasetManifest& manifest, const ManifestSubject& subject) {
    SubjectRecording rec = load_recording(subject.path, manifest, subject.subject_id);
    rec = remove_artifacts(rec);
    if (manifest.label_mode == LabelMode::marker_derived) {
        if (!rec.marker)
            raise(Errc::missing_channel,
                  "marker channel required for marker-derived labels (" + subject.path + ")");
        auto peaks = detect_marker_peaks(*rec.marker, rec.sample_rate_hz);
        return trim_and_label(rec, peaks, manifest.trial_template);
    }
    if (subject.spans_path.empty())
        raise(Errc::io_error, "subject " + subject.subject_id + " has no span file");
    auto spans = load_spans(subject.spans_path);
    rec.labels = labels_from_spans(rec, spans);
    return {std::move(rec), std::move(spans)};
}

}  // namespace stress::io
