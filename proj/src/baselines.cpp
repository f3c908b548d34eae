#include "stress/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stress/error.hpp"

namespace stress::ml {

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    if (a.size() != b.size())
        raise(Errc::dim_mismatch,
              std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (!(gamma > 0)) throw std::invalid_argument("rbf_kernel: gamma must be positive");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double kernel_eval(Kernel k, double gamma, const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size())
        raise(Errc::dim_mismatch,
              std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return k == Kernel::linear ? dot(a, b) : rbf_kernel(a, b, gamma);
}

bool has_both_classes(const std::vector<int>& y, int lo, int hi) {
    bool a = false, b = false;
    for (int v : y) {
        if (v == lo) a = true;
        if (v == hi) b = true;
    }
    return a && b;
}

}  // namespace

LogRegModel train_logreg(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                         double l2_lambda, const nn::TrainConfig& cfg) {
    if (x.empty() || x.size() != y.size())
        raise(Errc::shape_mismatch, "x/y sizes disagree or empty");
    if (!has_both_classes(y, 0, 1)) raise(Errc::single_class_data, "labels are all one class");

    const std::size_t n = x.size();
    const std::size_t d = x[0].size();
    std::vector<double> params(d + 1, 0.0);  // weights then bias
    nn::AdamState adam =
        nn::make_adam_state(params.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    std::vector<double> grads(params.size());
    for (int iter = 0; iter < cfg.max_epochs; ++iter) {
        std::fill(grads.begin(), grads.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z = params[d];
            for (std::size_t f = 0; f < d; ++f) z += params[f] * x[i][f];
            double p = nn::sigmoid(z);
            double e = (p > nn::kProbClip && p < 1.0 - nn::kProbClip)
                           ? p - static_cast<double>(y[i])
                           : 0.0;
            for (std::size_t f = 0; f < d; ++f) grads[f] += e * x[i][f];
            grads[d] += e;
        }
        const double inv = 1.0 / static_cast<double>(n);
        double norm2 = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
            grads[f] = grads[f] * inv + 2.0 * l2_lambda * params[f];
            norm2 += grads[f] * grads[f];
        }
        grads[d] *= inv;
        norm2 += grads[d] * grads[d];
        if (std::sqrt(norm2) < 1e-6) break;
        nn::adam_step(adam, params, grads);
    }

    LogRegModel model;
    model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
    model.bias = params[d];
    model.l2_lambda = l2_lambda;
    model.trained = true;
    return model;
}

SvmModel train_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   Kernel kernel, double C, double gamma, std::vector<double>* alphas_out) {
    if (x.empty() || x.size() != y.size())
        raise(Errc::shape_mismatch, "x/y sizes disagree or empty");
    if (!(C > 0)) throw std::invalid_argument("train_svm: C must be positive");
    if (!has_both_classes(y, -1, 1)) raise(Errc::single_class_data, "need both -1 and +1");

    const std::size_t n = x.size();
    // Full Gram matrix; training sets here are at most a few thousand points.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            K[i * n + j] = K[j * n + i] = kernel_eval(kernel, gamma, x[i], x[j]);
    auto k = [&](std::size_t i, std::size_t j) { return K[i * n + j]; };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n);  // E_i = f(x_i) - y_i, maintained incrementally
    for (std::size_t i = 0; i < n; ++i) err[i] = -static_cast<double>(y[i]);
    double b = 0.0;

    // Takes one SMO pair step; returns true when alpha actually moved.
    auto take_step = [&](std::size_t i, std::size_t j) -> bool {
        if (i == j) return false;
        const double yi = y[i], yj = y[j];
        const double ai = alpha[i], aj = alpha[j];
        const double Ei = err[i], Ej = err[j];
        const double s = yi * yj;

        double L, H;
        if (yi != yj) {
            L = std::max(0.0, aj - ai);
            H = std::min(C, C + aj - ai);
        } else {
            L = std::max(0.0, ai + aj - C);
            H = std::min(C, ai + aj);
        }
        if (L >= H) return false;

        const double eta = k(i, i) + k(j, j) - 2.0 * k(i, j);
        double aj_new;
        if (eta > 0) {
            aj_new = aj + yj * (Ei - Ej) / eta;
            aj_new = std::clamp(aj_new, L, H);
        } else {
            // Degenerate curvature: evaluate the objective at both clip ends.
            const double f1 = yi * (Ei + b) - ai * k(i, i) - s * aj * k(i, j);
            const double f2 = yj * (Ej + b) - s * ai * k(i, j) - aj * k(j, j);
            const double L1 = ai + s * (aj - L);
            const double H1 = ai + s * (aj - H);
            const double psiL = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k(i, i) +
                                0.5 * L * L * k(j, j) + s * L * L1 * k(i, j);
            const double psiH = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k(i, i) +
                                0.5 * H * H * k(j, j) + s * H * H1 * k(i, j);
            if (psiL < psiH - 1e-12) aj_new = L;
            else if (psiL > psiH + 1e-12) aj_new = H;
            else return false;
        }
        if (std::abs(aj_new - aj) < 1e-12 * (aj_new + aj + 1e-12)) return false;

        double ai_new = ai + s * (aj - aj_new);
        // Snap to the box to keep the KKT cases crisp.
        if (ai_new < 1e-10) ai_new = 0.0;
        if (ai_new > C - 1e-10) ai_new = C;
        if (aj_new < 1e-10) aj_new = 0.0;
        if (aj_new > C - 1e-10) aj_new = C;

        const double dai = ai_new - ai, daj = aj_new - aj;
        const double b1 = b - Ei - yi * dai * k(i, i) - yj * daj * k(i, j);
        const double b2 = b - Ej - yi * dai * k(i, j) - yj * daj * k(j, j);
        double b_new;
        if (ai_new > 0 && ai_new < C) b_new = b1;
        else if (aj_new > 0 && aj_new < C) b_new = b2;
        else b_new = 0.5 * (b1 + b2);

        const double db = b_new - b;
        for (std::size_t q = 0; q < n; ++q)
            err[q] += yi * dai * k(i, q) + yj * daj * k(j, q) + db;
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        b = b_new;
        return true;
    };

    bool converged = false;
    for (int pass = 0; pass < kSmoMaxPasses; ++pass) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = err[i] * y[i];  // y_i f(x_i) - 1
            const bool violates =
                (r < -kSmoTol && alpha[i] < C) || (r > kSmoTol && alpha[i] > 0);
            if (!violates) continue;

            // Second choice: largest |Ei - Ej|, then the remaining indices.
            std::size_t best = i;
            double best_gap = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double gap = std::abs(err[i] - err[j]);
                if (gap > best_gap) {
                    best_gap = gap;
                    best = j;
                }
            }
            if (take_step(i, best)) {
                ++changed;
                continue;
            }
            for (std::size_t off = 1; off < n; ++off) {
                std::size_t j = (i + off) % n;
                if (j != best && take_step(i, j)) {
                    ++changed;
                    break;
                }
            }
        }
        if (changed == 0) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        // A final KKT scan decides whether the pass budget actually mattered.
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const double r = err[i] * y[i];
            if ((r < -kSmoTol && alpha[i] < C) || (r > kSmoTol && alpha[i] > 0)) ok = false;
        }
        if (!ok) raise(Errc::no_convergence, "SMO pass budget exhausted");
    }

    SvmModel model;
    model.kernel = kernel;
    model.gamma = gamma;
    model.C = C;
    model.bias = b;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            model.support_vectors.push_back(x[i]);
            model.dual_coefs.push_back(alpha[i] * y[i]);
        }
    }
    model.trained = true;
    if (alphas_out) *alphas_out = alpha;
    return model;
}

double svm_decision(const SvmModel& model, const std::vector<double>& x) {
    if (!model.trained) raise(Errc::untrained_model, "svm");
    double s = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        s += model.dual_coefs[i] * kernel_eval(model.kernel, model.gamma,
                                               model.support_vectors[i], x);
    return s;
}

std::pair<int, double> predict(const LogRegModel& model, const std::vector<double>& x) {
    if (!model.trained) raise(Errc::untrained_model, "logreg");
    if (x.size() != model.weights.size())
        raise(Errc::dim_mismatch,
              std::to_string(x.size()) + " vs " + std::to_string(model.weights.size()));
    double score = nn::sigmoid(dot(model.weights, x) + model.bias);
    return {score >= 0.5 ? 1 : 0, score};
}

std::pair<int, double> predict(const SvmModel& model, const std::vector<double>& x) {
    double score = svm_decision(model, x);
    return {score >= 0.0 ? 1 : 0, score};
}

double svm_dual_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                          const std::vector<double>& alphas, Kernel kernel, double gamma) {
    double obj = 0.0;
    for (double a : alphas) obj += a;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (alphas[i] == 0.0) continue;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (alphas[j] == 0.0) continue;
            obj -= 0.5 * alphas[i] * alphas[j] * y[i] * y[j] *
                   kernel_eval(kernel, gamma, x[i], x[j]);
        }
    }
    return obj;
}

}  // namespace stress::ml
