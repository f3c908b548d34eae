#include "stress/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "stress/error.hpp"
#include "stress/text.hpp"

namespace stress::eval {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

SplitManifest make_split(const WindowedDataset& ds, std::uint64_t seed) {
    SplitManifest split;
    split.seed = seed;
    for (std::size_t s = 0; s < ds.n_subjects(); ++s) {
        const std::string& id = ds.subject_ids[s];
        const std::size_t n = ds.windows[s].size();
        if (n < 10)
            raise(Errc::subject_too_small,
                  id + " has " + std::to_string(n) + " windows, need >= 10");

        const std::uint64_t h = fnv1a(id);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
        std::mt19937_64 rng(seq);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);

        const std::size_t n_test = static_cast<std::size_t>(
            std::llround(kTestFraction * static_cast<double>(n)));
        SubjectSplit ss;
        ss.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        ss.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
        ss.folds.resize(ss.train.size());
        // Round-robin over the shuffled order keeps fold sizes within one.
        for (std::size_t i = 0; i < ss.train.size(); ++i)
            ss.folds[i] = static_cast<int>(i % kNumFolds);
        split.subjects.emplace(id, std::move(ss));
    }
    return split;
}

double f1_score(const ConfusionMatrix& cm) {
    const long denom = 2 * cm.tp + cm.fp + cm.fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(cm.tp) / static_cast<double>(denom);
}

double cohen_kappa(const ConfusionMatrix& cm) {
    const double total = static_cast<double>(cm.total());
    if (total == 0) raise(Errc::empty_matrix, "cohen_kappa on empty confusion matrix");
    const double po = static_cast<double>(cm.tp + cm.tn) / total;
    const double pe =
        (static_cast<double>(cm.tp + cm.fp) * static_cast<double>(cm.tp + cm.fn) +
         static_cast<double>(cm.fn + cm.tn) * static_cast<double>(cm.fp + cm.tn)) /
        (total * total);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

void aggregate(ModelMetrics& m) {
    const double n = static_cast<double>(m.per_subject.size());
    if (m.per_subject.empty()) return;
    double sf = 0.0, sk = 0.0;
    for (const auto& s : m.per_subject) {
        sf += s.f1;
        sk += s.kappa;
    }
    m.mean_f1 = sf / n;
    m.mean_kappa = sk / n;
    double vf = 0.0, vk = 0.0;
    for (const auto& s : m.per_subject) {
        vf += (s.f1 - m.mean_f1) * (s.f1 - m.mean_f1);
        vk += (s.kappa - m.mean_kappa) * (s.kappa - m.mean_kappa);
    }
    m.std_f1 = std::sqrt(vf / n);
    m.std_kappa = std::sqrt(vk / n);
}

void save_split(const SplitManifest& split, const std::string& path) {
    json j;
    j["seed"] = split.seed;
    j["dataset"] = split.dataset;
    json subjects = json::object();
    for (const auto& [id, ss] : split.subjects) {
        json js;
        js["train"] = ss.train;
        js["test"] = ss.test;
        js["folds"] = ss.folds;
        subjects[id] = js;
    }
    j["subjects"] = subjects;
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << j.dump(2) << '\n';
}

SplitManifest load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    json j;
    in >> j;
    SplitManifest split;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.dataset = j.value("dataset", "");
    for (auto it = j.at("subjects").begin(); it != j.at("subjects").end(); ++it) {
        SubjectSplit ss;
        ss.train = it.value().at("train").get<std::vector<std::size_t>>();
        ss.test = it.value().at("test").get<std::vector<std::size_t>>();
        ss.folds = it.value().at("folds").get<std::vector<int>>();
        split.subjects.emplace(it.key(), std::move(ss));
    }
    return split;
}

void save_report_json(const MetricsReport& report, const std::string& path) {
    json j;
    j["dataset"] = report.dataset;
    j["seed"] = report.seed;
    j["models"] = json::array();
    for (const auto& m : report.models) {
        json jm;
        jm["name"] = m.name;
        jm["per_subject"] = json::array();
        for (const auto& s : m.per_subject) {
            jm["per_subject"].push_back({{"subject_id", s.subject_id},
                                         {"f1", s.f1},
                                         {"kappa", s.kappa},
                                         {"n_test", s.n_test}});
        }
        jm["mean_f1"] = m.mean_f1;
        jm["std_f1"] = m.std_f1;
        jm["mean_kappa"] = m.mean_kappa;
        jm["std_kappa"] = m.std_kappa;
        j["models"].push_back(jm);
    }
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << j.dump(2) << '\n';
}

MetricsReport load_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    json j;
    in >> j;
    MetricsReport report;
    report.dataset = j.at("dataset").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jm : j.at("models")) {
        ModelMetrics m;
        m.name = jm.at("name").get<std::string>();
        for (const auto& js : jm.at("per_subject")) {
            SubjectMetrics s;
            s.subject_id = js.at("subject_id").get<std::string>();
            s.f1 = js.at("f1").get<double>();
            s.kappa = js.at("kappa").get<double>();
            s.n_test = js.at("n_test").get<long>();
            m.per_subject.push_back(std::move(s));
        }
        m.mean_f1 = jm.at("mean_f1").get<double>();
        m.std_f1 = jm.at("std_f1").get<double>();
        m.mean_kappa = jm.at("mean_kappa").get<double>();
        m.std_kappa = jm.at("std_kappa").get<double>();
        report.models.push_back(std::move(m));
    }
    return report;
}

void save_report_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << "model,subject_id,f1,kappa,n_test\n";
    for (const auto& m : report.models)
        for (const auto& s : m.per_subject)
            out << m.name << ',' << s.subject_id << ',' << text::format_double(s.f1) << ','
                << text::format_double(s.kappa) << ',' << s.n_test << '\n';
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

std::string render_report_markdown(const MetricsReport& report) {
    std::string out;
    out += "| Model | F-Score | Kappa |\n";
    out += "|-------|---------|-------|\n";
    for (const auto& m : report.models) {
        out += "| " + m.name + " | " + fixed3(m.mean_f1) + " ± " + fixed3(m.std_f1) +
               " | " + fixed3(m.mean_kappa) + " ± " + fixed3(m.std_kappa) + " |\n";
    }
    return out;
}

}  // namespace stress::eval
