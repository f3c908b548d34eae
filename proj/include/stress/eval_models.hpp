#pragma once

#include <vector>

#include "stress/checkpoint.hpp"
#include "stress/eval.hpp"
#include "stress/nncore.hpp"
#include "stress/types.hpp"

namespace stress::eval {

struct CvCandidate {
    model::Hyper hyper;
    std::vector<double> fold_f1;
    double mean_f1 = 0.0;
};

struct CvResult {
    model::Hyper best;
    std::vector<double> best_fold_f1;
    std::vector<CvCandidate> candidates;
};

// Hyperparameter grids searched by cross-validation, per model family.
std::vector<model::Hyper> default_grid(model::Kind kind);

// 5-fold CV over the split's train indices. Ties on mean validation F1 break
// toward the stronger regularizer (larger lambda, then smaller C, then
// smaller gamma).
CvResult run_cv(model::Kind kind, const WindowedDataset& ds, const SplitManifest& split,
                const std::vector<model::Hyper>& grid, const nn::TrainConfig& base_cfg);

// Trains on every subject's full train split with the given hyperparameters.
model::Checkpoint train_final(model::Kind kind, const WindowedDataset& ds,
                              const SplitManifest& split, const model::Hyper& hyper,
                              const nn::TrainConfig& base_cfg, nn::TrainLog* log = nullptr);

// Per-subject test metrics for one trained model.
ModelMetrics evaluate_model(const model::Checkpoint& ckpt, const WindowedDataset& ds,
                            const SplitManifest& split);

MetricsReport evaluate_all(const std::vector<model::Checkpoint>& models,
                           const WindowedDataset& ds, const SplitManifest& split);

}  // namespace stress::eval
