#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stress/nncore.hpp"

namespace stress::ml {

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    double l2_lambda = 0.0;
    bool trained = false;
};

enum class Kernel { linear, rbf };

struct SvmModel {
    Kernel kernel = Kernel::linear;
    double gamma = 0.0;  // rbf only
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;
    double C = 1.0;
    bool trained = false;
};

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma);

// Full-batch Adam on mean BCE + lambda*||w||^2 until the gradient norm drops
// below 1e-6 or cfg.max_epochs iterations. Bias carries no penalty.
LogRegModel train_logreg(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                         double l2_lambda, const nn::TrainConfig& cfg);

// Soft-margin dual via sequential minimal optimization, KKT tolerance 1e-3,
// at most 1e4 passes. y must be -1/+1. alphas_out, when given, receives the
// full dual vector (one entry per training point).
SvmModel train_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   Kernel kernel, double C, double gamma = 1.0,
                   std::vector<double>* alphas_out = nullptr);

inline constexpr double kSmoTol = 1e-3;
inline constexpr int kSmoMaxPasses = 10000;

// Class in {0,1} plus the raw decision score.
std::pair<int, double> predict(const LogRegModel& model, const std::vector<double>& x);
std::pair<int, double> predict(const SvmModel& model, const std::vector<double>& x);

double svm_decision(const SvmModel& model, const std::vector<double>& x);

// Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij,
// evaluated on the training set the model was fit to.
double svm_dual_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                          const std::vector<double>& alphas, Kernel kernel, double gamma);

}  // namespace stress::ml
