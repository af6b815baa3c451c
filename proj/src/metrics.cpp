#include "mfp/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "mfp/errors.hpp"

namespace mfp {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw DataError("metric input lengths differ");
}

} // namespace

double mse(std::span<const double> truth, std::span<const double> pred) {
    check_lengths(truth.size(), pred.size());
    if (truth.empty()) throw DegenerateInputError("mse of empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double e = truth[i] - pred[i];
        s += e * e;
    }
    return s / static_cast<double>(truth.size());
}

double nmse_continuous(std::span<const double> truth, std::span<const double> pred,
                       double ref_mean) {
    check_lengths(truth.size(), pred.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double e = truth[i] - pred[i];
        double r = truth[i] - ref_mean;
        num += e * e;
        den += r * r;
    }
    if (den <= 0.0)
        throw DegenerateInputError("nmse: zero reference variance (constant truth)");
    return num / den;
}

double brier(std::span<const std::int32_t> truth, std::span<const double> probs,
             std::size_t n_classes) {
    if (n_classes < 2) throw DegenerateInputError("brier needs at least 2 classes");
    if (probs.size() != truth.size() * n_classes)
        throw DataError("brier: probability matrix shape mismatch");
    if (truth.empty()) throw DegenerateInputError("brier of empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t j = 0; j < n_classes; ++j) {
            double y = truth[i] == static_cast<std::int32_t>(j) ? 1.0 : 0.0;
            double e = probs[i * n_classes + j] - y;
            s += e * e;
        }
    }
    return s / static_cast<double>(truth.size());
}

double brier_ref(std::span<const double> class_proportions) {
    double s = 0.0;
    for (double p : class_proportions) s += p * p;
    return 1.0 - s;
}

double nmse_categorical(std::span<const std::int32_t> truth, std::span<const double> probs,
                        std::span<const double> class_proportions) {
    double ref = brier_ref(class_proportions);
    if (ref <= 0.0)
        throw DegenerateInputError("nmse: zero reference Brier score (single class)");
    return brier(truth, probs, class_proportions.size()) / ref;
}

double mer(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred) {
    check_lengths(truth.size(), pred.size());
    if (truth.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += truth[i] != pred[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double f1(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred,
          std::int32_t positive) {
    check_lengths(truth.size(), pred.size());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool t = truth[i] == positive;
        bool p = pred[i] == positive;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    if (2 * tp + fp + fn == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double macro_f1(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred) {
    check_lengths(truth.size(), pred.size());
    std::set<std::int32_t> classes(truth.begin(), truth.end());
    classes.insert(pred.begin(), pred.end());
    if (classes.empty()) return 0.0;
    double s = 0.0;
    for (auto c : classes) s += f1(truth, pred, c);
    return s / static_cast<double>(classes.size());
}

double auroc(std::span<const std::int32_t> truth, std::span<const double> scores) {
    check_lengths(truth.size(), scores.size());
    const std::size_t n = truth.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (truth[order[k]] != 0) {
                rank_sum_pos += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateInputError("auroc: both classes must be present");
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double r_squared(std::span<const double> truth, std::span<const double> pred,
                 double ref_mean) {
    return 1.0 - nmse_continuous(truth, pred, ref_mean);
}

double bss(std::span<const std::int32_t> truth, std::span<const double> probs,
           std::span<const double> class_proportions) {
    return 1.0 - nmse_categorical(truth, probs, class_proportions);
}

} // namespace mfp
