// Independent reference implementations used to cross-check the library.
// Everything here is computed straight from the definitions, on a separate
// code path from the production modules.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline long double lmean(const std::vector<double>& x) {
    long double s = 0.0L;
    for (double v : x) s += v;
    return s / static_cast<long double>(x.size());
}

inline long double central_moment(const std::vector<double>& x, int k) {
    const long double mu = lmean(x);
    long double s = 0.0L;
    for (double v : x) s += std::pow(static_cast<long double>(v) - mu, k);
    return s / static_cast<long double>(x.size());
}

// The 16 features in canonical order, recomputed from their definitions.
inline std::array<double, 16> features16(const std::vector<double>& hr,
                                         const std::vector<double>& sc) {
    std::array<double, 16> out{};

    // HR block: mean, std, min, max, range, rmssd, sdsd.
    out[0] = static_cast<double>(lmean(hr));
    out[1] = static_cast<double>(std::sqrt(central_moment(hr, 2)));
    std::vector<double> sorted_hr = hr;
    std::sort(sorted_hr.begin(), sorted_hr.end());
    out[2] = sorted_hr.front();
    out[3] = sorted_hr.back();
    out[4] = out[3] - out[2];
    std::vector<double> d;
    for (std::size_t i = 1; i < hr.size(); ++i) d.push_back(hr[i] - hr[i - 1]);
    long double sq = 0.0L;
    for (double v : d) sq += static_cast<long double>(v) * v;
    out[5] = static_cast<double>(std::sqrt(sq / static_cast<long double>(d.size())));
    out[6] = static_cast<double>(std::sqrt(central_moment(d, 2)));

    // SC block: mean, std, min, max, range, n_peaks, amplitude, skew, kurt.
    out[7] = static_cast<double>(lmean(sc));
    const long double m2 = central_moment(sc, 2);
    out[8] = static_cast<double>(std::sqrt(m2));
    std::vector<double> sorted_sc = sc;
    std::sort(sorted_sc.begin(), sorted_sc.end());
    out[9] = sorted_sc.front();
    out[10] = sorted_sc.back();
    out[11] = out[10] - out[9];

    // Peak scan: every interior local maximum, amplitude measured from the
    // lowest sample since the previously accepted peak.
    int count = 0;
    long double amp_sum = 0.0L;
    std::size_t segment_start = 0;
    for (std::size_t i = 1; i + 1 < sc.size(); ++i) {
        if (!(sc[i] > sc[i - 1] && sc[i] >= sc[i + 1])) continue;
        double trough = *std::min_element(sc.begin() + static_cast<std::ptrdiff_t>(segment_start),
                                          sc.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        double rise = sc[i] - trough;
        if (rise >= 0.05) {
            ++count;
            amp_sum += rise;
            segment_start = i;  // amplitudes never reach back across a peak
        }
    }
    out[12] = count;
    out[13] = count > 0 ? static_cast<double>(amp_sum / count) : 0.0;

    if (m2 < 1e-12L) {
        out[14] = 0.0;
        out[15] = 0.0;
    } else {
        out[14] = static_cast<double>(central_moment(sc, 3) / std::pow(m2, 1.5L));
        out[15] = static_cast<double>(central_moment(sc, 4) / (m2 * m2) - 3.0L);
    }
    return out;
}

// F1 and kappa recounted directly from label/prediction pairs; the counts
// are exact integers so agreement with the library can be checked exactly.
inline double f1_from_pairs(const std::vector<int>& truth, const std::vector<int>& pred) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] == 1 && truth[i] == 1) ++tp;
        if (pred[i] == 1 && truth[i] == 0) ++fp;
        if (pred[i] == 0 && truth[i] == 1) ++fn;
    }
    const long denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline double kappa_from_pairs(const std::vector<int>& truth, const std::vector<int>& pred) {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1 && pred[i] == 1) ++tp;
        else if (truth[i] == 0 && pred[i] == 1) ++fp;
        else if (truth[i] == 1 && pred[i] == 0) ++fn;
        else ++tn;
    }
    const double n = static_cast<double>(tp + fp + fn + tn);
    const double po = static_cast<double>(tp + tn) / n;
    const double pe = (static_cast<double>(tp + fp) * static_cast<double>(tp + fn) +
                       static_cast<double>(fn + tn) * static_cast<double>(fp + tn)) /
                      (n * n);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

// Projected gradient ascent on the SVM dual: independent route to the
// optimum for small problems. Projection enforces 0 <= a <= C and
// sum(a_i y_i) = 0 by bisecting the hyperplane multiplier.
inline double svm_dual_bruteforce(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y, double C,
                                  const std::vector<std::vector<double>>& gram,
                                  std::vector<double>* alpha_out = nullptr) {
    const std::size_t n = x.size();
    std::vector<double> a(n, 0.0);

    auto project = [&](std::vector<double>& v) {
        auto shifted_sum = [&](double mu) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += y[i] * std::clamp(v[i] - mu * y[i], 0.0, C);
            return s;
        };
        double lo = -1e6, hi = 1e6;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (shifted_sum(mid) > 0) lo = mid;
            else hi = mid;
        }
        double mu = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - mu * y[i], 0.0, C);
    };

    std::vector<double> g(n);
    double step = 0.5;
    for (int iter = 0; iter < 200000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += a[j] * y[i] * y[j] * gram[i][j];
            g[i] = 1.0 - s;
        }
        for (std::size_t i = 0; i < n; ++i) a[i] += step * g[i];
        project(a);
        if (iter % 20000 == 19999) step *= 0.5;
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += a[i];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            obj -= 0.5 * a[i] * a[j] * y[i] * y[j] * gram[i][j];
    if (alpha_out) *alpha_out = a;
    return obj;
}

}  // namespace oracle
