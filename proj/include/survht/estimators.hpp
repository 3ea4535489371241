#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "survht/designs.hpp"
#include "survht/kahan.hpp"
#include "survht/threshold.hpp"

namespace survht {

/// Thrown when a ratio estimator's denominator vanishes (including the empty
/// Poisson sample, where the plain totals are well-defined empty sums but a
/// ratio is genuinely undefined).
class undefined_ratio_error : public std::domain_error {
  public:
    undefined_ratio_error() : std::domain_error("ratio estimator undefined: zero denominator") {}
};

/// Horvitz-Thompson total: sum over the sample of y_k / pi_k.
inline double ht_total(const Sample& s, std::span<const double> y, std::span<const double> pi) {
    KahanSum acc;
    for (std::size_t k : s.indices) {
        if (k >= y.size()) throw std::invalid_argument("ht_total: sample index out of range");
        if (!(pi[k] > 0.0))
            throw std::invalid_argument("ht_total: sampled unit " + std::to_string(k + 1) +
                                        " has zero inclusion probability");
        acc.add(y[k] / pi[k]);
    }
    return acc.value();
}

inline double ht_total(const Sample& s, std::span<const double> y, const InclusionProbs& p) {
    return ht_total(s, y, std::span<const double>(p.pi));
}

/// Thresholded total: the HT sum taken with the modified probabilities.
inline double iht_total(const Sample& s, std::span<const double> y, const ThresholdedProbs& tp) {
    return ht_total(s, y, std::span<const double>(tp.pi_star));
}

/// Sample-based unbiased estimator of MSE(iht_total).
///
/// Four terms: the squared-bias part runs over s2 = s intersect U2 and the
/// variance part over the whole sample, with Delta_kk / pi_k on the diagonal
/// and Delta_kl / pi_kl off it. Requires exact joint probabilities.
inline double mse_hat_iht(const Sample& s, std::span<const double> y, const ThresholdedProbs& tp,
                          const SecondOrderProvider& so) {
    if (!so.available())
        throw std::runtime_error("mse_hat_iht: second-order probabilities unknown for this design");

    std::vector<std::size_t> s2;
    for (std::size_t k : s.indices)
        if (tp.in_u2[k]) s2.push_back(k);

    KahanSum acc;
    if (!s2.empty()) {
        const double a = *tp.a;
        for (std::size_t k : s2) {
            const double d = tp.pi[k] - a;
            acc.add(d * d / (a * a * tp.pi[k]) * y[k] * y[k]);
        }
        for (std::size_t i = 0; i < s2.size(); ++i) {
            for (std::size_t j = 0; j < s2.size(); ++j) {
                if (i == j) continue;
                const std::size_t k = s2[i];
                const std::size_t l = s2[j];
                const double joint = so.joint(k, l);
                if (!(joint > 0.0))
                    throw std::runtime_error("mse_hat_iht: zero joint probability on sampled pair");
                acc.add((tp.pi[k] - a) * (tp.pi[l] - a) / (a * a * joint) * y[k] * y[l]);
            }
        }
    }
    for (std::size_t k : s.indices) {
        const double w = tp.pi_star[k];
        acc.add((1.0 - tp.pi[k]) * y[k] * y[k] / (w * w));
    }
    const bool independent = so.kind() == SecondOrderProvider::Kind::poisson;
    if (!independent) {
        for (std::size_t i = 0; i < s.indices.size(); ++i) {
            for (std::size_t j = 0; j < s.indices.size(); ++j) {
                if (i == j) continue;
                const std::size_t k = s.indices[i];
                const std::size_t l = s.indices[j];
                const double joint = so.joint(k, l);
                if (!(joint > 0.0))
                    throw std::runtime_error("mse_hat_iht: zero joint probability on sampled pair");
                const double delta_checked = (joint - tp.pi[k] * tp.pi[l]) / joint;
                acc.add(delta_checked / (tp.pi_star[k] * tp.pi_star[l]) * y[k] * y[l]);
            }
        }
    }
    return acc.value();
}

/// Ratio of HT means: (sum y_k/pi_k) / (sum z_k/pi_k); the 1/N factors cancel.
inline double ratio_hat(const Sample& s, std::span<const double> y, std::span<const double> z,
                        const InclusionProbs& p) {
    const double denom = ht_total(s, z, p);
    if (denom == 0.0) throw undefined_ratio_error{};
    return ht_total(s, y, p) / denom;
}

inline double ratio_iht_hat(const Sample& s, std::span<const double> y, std::span<const double> z,
                            const ThresholdedProbs& tp) {
    const double denom = iht_total(s, z, tp);
    if (denom == 0.0) throw undefined_ratio_error{};
    return iht_total(s, y, tp) / denom;
}

/// Ratio estimator of the y total given a known z total.
inline double ratio_total(const Sample& s, std::span<const double> y, std::span<const double> z,
                          double t_z, const InclusionProbs& p) {
    return t_z * ratio_hat(s, y, z, p);
}

inline double ratio_total(const Sample& s, std::span<const double> y, std::span<const double> z,
                          double t_z, const ThresholdedProbs& tp) {
    return t_z * ratio_iht_hat(s, y, z, tp);
}

enum class EstimatorKind { ht, iht, ratio, ratio_iht };

inline std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::ht: return "ht";
        case EstimatorKind::iht: return "iht";
        case EstimatorKind::ratio: return "ratio";
        case EstimatorKind::ratio_iht: return "ratio_iht";
    }
    throw std::invalid_argument("unknown estimator kind");
}

/// Point estimate with both reporting scales; mse_hat is present only when a
/// second-order provider was available.
struct EstimateReport {
    EstimatorKind kind = EstimatorKind::ht;
    double total = 0.0;
    double mean = 0.0;
    std::optional<double> mse_hat;        ///< total scale
    std::optional<double> mse_hat_mean;   ///< mse_hat / N^2
};

} // namespace survht
