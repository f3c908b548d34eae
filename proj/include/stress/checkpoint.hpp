#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "stress/baselines.hpp"
#include "stress/nncore.hpp"
#include "stress/types.hpp"

namespace stress::model {

enum class Kind { lr, svm_linear, svm_rbf, st_nn, mt_nn };

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

// Chosen hyperparameters after cross-validation; which fields are active
// depends on the model kind.
struct Hyper {
    double lambda = 0.0;
    double C = 0.0;
    double gamma = 0.0;
};

// The task id used when a network is trained subject-pooled.
inline const std::string kPooledTask = "pooled";

struct Checkpoint {
    Kind kind = Kind::lr;
    std::string dataset;
    std::uint64_t seed = 0;
    nn::TrainConfig train_cfg;
    Hyper hyper;

    nn::MtlNetwork net;      // st-nn / mt-nn
    ml::LogRegModel logreg;  // lr
    ml::SvmModel svm;        // svm-l / svm-rbf
};

// JSON envelope with flattened row-major parameters and an FNV-1a checksum
// over the parameter bytes; load verifies the checksum.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Routes one feature window through the stored model. MT-NN selects the head
// for the window's subject; pooled models ignore the subject id.
std::pair<int, double> predict_window(const Checkpoint& ckpt, const FeatureVector& fv);

}  // namespace stress::model
