#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stress/types.hpp"

namespace stress::eval {

struct SubjectSplit {
    std::vector<std::size_t> train;  // window indices into the subject's list
    std::vector<std::size_t> test;
    std::vector<int> folds;  // parallel to train, values 0..4
};

struct SplitManifest {
    std::uint64_t seed = 0;
    std::string dataset;
    std::map<std::string, SubjectSplit> subjects;
};

inline constexpr int kNumFolds = 5;
inline constexpr double kTestFraction = 0.2;

struct ConfusionMatrix {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    long total() const { return tp + fp + fn + tn; }
    void add(int truth, int pred) {
        if (truth == 1 && pred == 1) ++tp;
        else if (truth == 0 && pred == 1) ++fp;
        else if (truth == 1 && pred == 0) ++fn;
        else ++tn;
    }
};

struct SubjectMetrics {
    std::string subject_id;
    double f1 = 0.0;
    double kappa = 0.0;
    long n_test = 0;
};

struct ModelMetrics {
    std::string name;
    std::vector<SubjectMetrics> per_subject;
    double mean_f1 = 0.0, std_f1 = 0.0;
    double mean_kappa = 0.0, std_kappa = 0.0;
};

struct MetricsReport {
    std::string dataset;
    std::uint64_t seed = 0;
    std::vector<ModelMetrics> models;
};

// Per-subject seeded shuffle, 80/20 partition, then 5-fold assignment over
// the train part. The per-subject RNG stream depends only on (seed,
// subject_id), never on subject order.
SplitManifest make_split(const WindowedDataset& ds, std::uint64_t seed);

double f1_score(const ConfusionMatrix& cm);
double cohen_kappa(const ConfusionMatrix& cm);

// Aggregates per-subject metrics into mean +- population std across subjects.
void aggregate(ModelMetrics& m);

void save_split(const SplitManifest& split, const std::string& path);
SplitManifest load_split(const std::string& path);

// Report rendering: machine JSON, per-subject CSV rows, and a markdown table
// with one row per model.
void save_report_json(const MetricsReport& report, const std::string& path);
MetricsReport load_report_json(const std::string& path);
void save_report_csv(const MetricsReport& report, const std::string& path);
std::string render_report_markdown(const MetricsReport& report);

}  // namespace stress::eval
