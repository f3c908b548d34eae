#include "stress/eval_models.hpp"

#include <algorithm>
#include <cmath>

#include "stress/error.hpp"

namespace stress::eval {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return splitmix64(master ^ splitmix64(a ^ splitmix64(b)));
}

struct Pooled {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

// fold == -1 selects the whole train split; otherwise train rows with
// fold != `exclude_fold` (use_val false) or == it (use_val true).
template <typename Fn>
void for_train_rows(const WindowedDataset& ds, const SplitManifest& split, int exclude_fold,
                    bool use_val, Fn&& fn) {
    for (const auto& [id, ss] : split.subjects) {
        int subj = ds.subject_index(id);
        if (subj < 0) raise(Errc::io_error, "split refers to unknown subject " + id);
        const auto& windows = ds.windows[static_cast<std::size_t>(subj)];
        for (std::size_t i = 0; i < ss.train.size(); ++i) {
            bool in_val = exclude_fold >= 0 && ss.folds[i] == exclude_fold;
            if (use_val != in_val) continue;
            fn(id, windows.at(ss.train[i]));
        }
    }
}

Pooled pool_rows(const WindowedDataset& ds, const SplitManifest& split, int exclude_fold,
                 bool use_val, bool svm_labels) {
    Pooled p;
    for_train_rows(ds, split, exclude_fold, use_val,
                   [&](const std::string&, const FeatureVector& w) {
                       p.x.emplace_back(w.values.begin(), w.values.end());
                       p.y.push_back(svm_labels ? (w.label == 1 ? 1 : -1) : w.label);
                   });
    return p;
}

nn::MultiTaskData task_rows(const WindowedDataset& ds, const SplitManifest& split,
                            int exclude_fold, bool pooled_task) {
    nn::MultiTaskData data;
    for_train_rows(ds, split, exclude_fold, false,
                   [&](const std::string& id, const FeatureVector& w) {
                       auto& td = data[pooled_task ? model::kPooledTask : id];
                       td.x.emplace_back(w.values.begin(), w.values.end());
                       td.y.push_back(w.label);
                   });
    return data;
}

model::Checkpoint fit(model::Kind kind, const WindowedDataset& ds, const SplitManifest& split,
                      int exclude_fold, const model::Hyper& hyper,
                      const nn::TrainConfig& base_cfg, std::uint64_t seed,
                      nn::TrainLog* log) {
    model::Checkpoint ckpt;
    ckpt.kind = kind;
    ckpt.hyper = hyper;
    ckpt.train_cfg = base_cfg;
    ckpt.train_cfg.seed = seed;

    switch (kind) {
        case model::Kind::lr: {
            Pooled p = pool_rows(ds, split, exclude_fold, false, false);
            ckpt.logreg = ml::train_logreg(p.x, p.y, hyper.lambda, ckpt.train_cfg);
            break;
        }
        case model::Kind::svm_linear: {
            Pooled p = pool_rows(ds, split, exclude_fold, false, true);
            ckpt.svm = ml::train_svm(p.x, p.y, ml::Kernel::linear, hyper.C);
            break;
        }
        case model::Kind::svm_rbf: {
            Pooled p = pool_rows(ds, split, exclude_fold, false, true);
            ckpt.svm = ml::train_svm(p.x, p.y, ml::Kernel::rbf, hyper.C, hyper.gamma);
            break;
        }
        case model::Kind::st_nn:
        case model::Kind::mt_nn: {
            nn::MultiTaskData data =
                task_rows(ds, split, exclude_fold, kind == model::Kind::st_nn);
            std::vector<std::string> ids;
            for (const auto& [id, _] : data) ids.push_back(id);
            ckpt.train_cfg.l2_lambda = hyper.lambda;
            ckpt.net = nn::make_mtl_network(ids, seed);
            nn::TrainLog l = nn::train_mtl(ckpt.net, data, ckpt.train_cfg);
            if (log) *log = l;
            break;
        }
    }
    return ckpt;
}

}  // namespace

std::vector<model::Hyper> default_grid(model::Kind kind) {
    std::vector<model::Hyper> grid;
    switch (kind) {
        case model::Kind::lr:
        case model::Kind::st_nn:
        case model::Kind::mt_nn:
            for (double l : {1e-4, 1e-3, 1e-2}) grid.push_back({l, 0.0, 0.0});
            break;
        case model::Kind::svm_linear:
            for (double c : {0.1, 1.0, 10.0}) grid.push_back({0.0, c, 0.0});
            break;
        case model::Kind::svm_rbf:
            for (double c : {0.1, 1.0, 10.0})
                for (double g : {0.01, 0.1, 1.0}) grid.push_back({0.0, c, g});
            break;
    }
    return grid;
}

namespace {

// Larger lambda, then smaller C, then smaller gamma counts as stronger
// regularization for tie-breaking.
bool stronger_regularization(const model::Hyper& a, const model::Hyper& b) {
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    if (a.C != b.C) return a.C < b.C;
    return a.gamma < b.gamma;
}

}  // namespace

CvResult run_cv(model::Kind kind, const WindowedDataset& ds, const SplitManifest& split,
                const std::vector<model::Hyper>& grid, const nn::TrainConfig& base_cfg) {
    if (grid.empty()) raise(Errc::bad_config, "empty hyperparameter grid");

    CvResult result;
    for (std::size_t h = 0; h < grid.size(); ++h) {
        CvCandidate cand;
        cand.hyper = grid[h];
        for (int fold = 0; fold < kNumFolds; ++fold) {
            std::uint64_t seed = derive_seed(base_cfg.seed, h, static_cast<std::uint64_t>(fold));
            model::Checkpoint ckpt;
            try {
                ckpt = fit(kind, ds, split, fold, grid[h], base_cfg, seed, nullptr);
            } catch (const Error& e) {
                raise(e.code(), "fold " + std::to_string(fold) + ": " + e.what());
            }
            ConfusionMatrix cm;
            for_train_rows(ds, split, fold, true,
                           [&](const std::string&, const FeatureVector& w) {
                               cm.add(w.label, model::predict_window(ckpt, w).first);
                           });
            cand.fold_f1.push_back(f1_score(cm));
        }
        double sum = 0.0;
        for (double f : cand.fold_f1) sum += f;
        cand.mean_f1 = sum / static_cast<double>(cand.fold_f1.size());
        result.candidates.push_back(std::move(cand));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.candidates.size(); ++i) {
        const auto& a = result.candidates[i];
        const auto& b = result.candidates[best];
        if (a.mean_f1 > b.mean_f1 ||
            (a.mean_f1 == b.mean_f1 && stronger_regularization(a.hyper, b.hyper)))
            best = i;
    }
    result.best = result.candidates[best].hyper;
    result.best_fold_f1 = result.candidates[best].fold_f1;
    return result;
}

model::Checkpoint train_final(model::Kind kind, const WindowedDataset& ds,
                              const SplitManifest& split, const model::Hyper& hyper,
                              const nn::TrainConfig& base_cfg, nn::TrainLog* log) {
    return fit(kind, ds, split, -1, hyper, base_cfg, base_cfg.seed, log);
}

ModelMetrics evaluate_model(const model::Checkpoint& ckpt, const WindowedDataset& ds,
                            const SplitManifest& split) {
    ModelMetrics metrics;
    metrics.name = model::kind_name(ckpt.kind);
    for (const auto& [id, ss] : split.subjects) {
        int subj = ds.subject_index(id);
        if (subj < 0) raise(Errc::io_error, "split refers to unknown subject " + id);
        const auto& windows = ds.windows[static_cast<std::size_t>(subj)];
        ConfusionMatrix cm;
        for (std::size_t idx : ss.test)
            cm.add(windows.at(idx).label, model::predict_window(ckpt, windows.at(idx)).first);
        SubjectMetrics sm;
        sm.subject_id = id;
        sm.f1 = f1_score(cm);
        sm.kappa = cohen_kappa(cm);
        sm.n_test = cm.total();
        metrics.per_subject.push_back(std::move(sm));
    }
    aggregate(metrics);
    return metrics;
}

MetricsReport evaluate_all(const std::vector<model::Checkpoint>& models,
                           const WindowedDataset& ds, const SplitManifest& split) {
    MetricsReport report;
    report.dataset = split.dataset;
    report.seed = split.seed;
    for (const auto& ckpt : models) report.models.push_back(evaluate_model(ckpt, ds, split));
    return report;
}

}  // namespace stress::eval
