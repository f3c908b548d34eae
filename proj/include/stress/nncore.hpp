#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stress::nn {

enum class Activation { elu, sigmoid, identity };

// Fully-connected layer. Parameters live in one contiguous block: weights
// row-major (out x in) followed by biases (out), so optimizer state,
// checkpoints and finite-difference sweeps all address the same flat layout.
struct DenseLayer {
    int in = 0;
    int out = 0;
    Activation act = Activation::identity;
    std::vector<double> params;

    double& w(int r, int c) { return params[static_cast<std::size_t>(r) * in + c]; }
    double w(int r, int c) const { return params[static_cast<std::size_t>(r) * in + c]; }
    double& b(int r) { return params[static_cast<std::size_t>(out) * in + r]; }
    double b(int r) const { return params[static_cast<std::size_t>(out) * in + r]; }
    std::size_t weight_count() const { return static_cast<std::size_t>(out) * in; }
    std::size_t param_count() const { return weight_count() + static_cast<std::size_t>(out); }
};

double elu(double x, double alpha);
double elu_prime(double x, double alpha);
double sigmoid(double x);

inline constexpr double kProbClip = 1e-7;

// Hard parameter sharing: one shared trunk feeding a per-task layer and a
// per-task sigmoid head. std::map keeps task iteration deterministic.
struct MtlNetwork {
    DenseLayer shared;                              // input_dim -> shared_units, elu
    std::map<std::string, DenseLayer> task_layers;  // shared_units -> task_units, elu
    std::map<std::string, DenseLayer> heads;        // task_units -> 1, sigmoid
    double elu_alpha = 1.0;

    bool has_task(const std::string& id) const { return task_layers.count(id) != 0; }
    std::vector<std::string> task_ids() const {
        std::vector<std::string> ids;
        for (const auto& [id, _] : task_layers) ids.push_back(id);
        return ids;
    }
};

// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
std::vector<double> glorot_init(int fan_out, int fan_in, std::mt19937_64& rng);
void glorot_init(DenseLayer& layer, std::mt19937_64& rng);

MtlNetwork make_mtl_network(const std::vector<std::string>& task_ids, std::uint64_t seed,
                            int input_dim = 16, int shared_units = 200, int task_units = 50);

double forward(const MtlNetwork& net, std::span<const double> x, const std::string& task_id);

double bce_loss(double p, int y, const MtlNetwork& net, const std::string& task_id,
                double l2_lambda);

// Gradients of bce_loss for the shared layer and the named task's layers,
// flat in the corresponding layer layouts.
struct TaskGradients {
    std::vector<double> shared;
    std::vector<double> task;
    std::vector<double> head;
};

TaskGradients backward(const MtlNetwork& net, std::span<const double> x, int y,
                       const std::string& task_id, double l2_lambda);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n_params, double lr, double beta1, double beta2,
                          double eps);

// One bias-corrected Adam update in place.
void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads);

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double l2_lambda = 1e-3;
    int batch_size = 32;
    int max_epochs = 500;
    int patience = 10;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct TaskData {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};
// Sorted by task id, which fixes the training iteration order.
using MultiTaskData = std::map<std::string, TaskData>;

struct TrainLog {
    std::vector<double> val_losses;  // one entry per epoch
    int epochs_run = 0;
    int best_epoch = -1;             // 0-based
    double best_val_loss = 0.0;
    double final_val_loss = 0.0;
    bool stopped_early = false;
};

// Alternating-task training: each step draws a task uniformly at random,
// takes a mini-batch from it and applies Adam to the shared trunk plus that
// task's layers. Early stopping watches mean validation BCE across tasks and
// restores the best epoch's parameters.
TrainLog train_mtl(MtlNetwork& net, const MultiTaskData& data, const TrainConfig& cfg);

}  // namespace stress::nn
