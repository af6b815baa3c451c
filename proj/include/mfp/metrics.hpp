#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mfp {

/// Normalized mean squared error against the mean-reference predictor:
/// sum((y - yhat)^2) / sum((y - ref_mean)^2). Throws DegenerateInputError
/// when the denominator is zero.
double nmse_continuous(std::span<const double> truth, std::span<const double> pred,
                       double ref_mean);

double mse(std::span<const double> truth, std::span<const double> pred);

/// Brier score over R classes: (1/N) sum_j sum_i (p_ij - y_ij)^2.
/// `probs` is row-major N x R.
double brier(std::span<const std::int32_t> truth, std::span<const double> probs,
             std::size_t n_classes);

/// Reference Brier score of the class-proportion predictor: 1 - sum(p_j^2).
double brier_ref(std::span<const double> class_proportions);

/// NMSE for categorical variables: brier / brier_ref = 1 - BSS.
double nmse_categorical(std::span<const std::int32_t> truth, std::span<const double> probs,
                        std::span<const double> class_proportions);

/// Misclassification error rate.
double mer(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred);

/// F1 of one positive class; 0/0 precision or recall yields 0.
double f1(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred,
          std::int32_t positive);

/// Unweighted mean F1 over the classes present in truth or prediction.
double macro_f1(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred);

/// Mann-Whitney AUROC with midrank tie handling. truth holds 0/1.
double auroc(std::span<const std::int32_t> truth, std::span<const double> scores);

double r_squared(std::span<const double> truth, std::span<const double> pred,
                 double ref_mean);

/// Brier skill score: 1 - nmse_categorical.
double bss(std::span<const std::int32_t> truth, std::span<const double> probs,
           std::span<const double> class_proportions);

} // namespace mfp
