#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "survht/designs.hpp"

namespace survht {

/// Hard-thresholded inclusion probabilities.
///
/// Units split into U1 (pi_k above the threshold, kept as-is) and U2
/// (pi_k <= a, raised to a). `k_chosen` is the count the selection loop
/// produced; |U2| can exceed it when several units tie at the threshold, so
/// membership is always defined by the set rule pi_k <= a.
struct ThresholdedProbs {
    std::vector<double> pi;        ///< original probabilities
    std::vector<double> pi_star;   ///< modified probabilities
    std::size_t k_chosen = 0;      ///< K of the selection loop (0 = no modification)
    std::optional<double> a;       ///< threshold value; absent when K = 0
    std::vector<char> in_u2;       ///< membership mask for U2

    [[nodiscard]] std::size_t size() const { return pi.size(); }

    [[nodiscard]] std::size_t u2_size() const {
        std::size_t n = 0;
        for (char m : in_u2) n += (m != 0);
        return n;
    }

    /// Units whose probability was actually raised (strict subset of U2
    /// whenever some pi_k equals the threshold exactly).
    [[nodiscard]] std::size_t modified_count() const {
        std::size_t n = 0;
        for (std::size_t k = 0; k < pi.size(); ++k) n += (pi_star[k] != pi[k]);
        return n;
    }

    static ThresholdedProbs unmodified(std::vector<double> pi) {
        ThresholdedProbs tp;
        tp.pi_star = pi;
        tp.pi = std::move(pi);
        tp.in_u2.assign(tp.pi.size(), 0);
        return tp;
    }
};

/// Threshold selection: sort the probabilities ascending and keep advancing
/// j while pi_(j) <= 1/(j+1); K is the last successful j and the threshold is
/// a = pi_(K). When even pi_(1) > 1/2 nothing qualifies and the probabilities
/// are returned unmodified (K = 0).
inline ThresholdedProbs choose_k(const InclusionProbs& p) {
    const std::size_t n_units = p.size();
    std::vector<double> sorted(p.pi);
    std::sort(sorted.begin(), sorted.end());

    std::size_t k_chosen = 0;
    for (std::size_t j = 1; j <= n_units; ++j) {
        if (sorted[j - 1] <= 1.0 / static_cast<double>(j + 1))
            k_chosen = j;
        else
            break;
    }
    if (k_chosen == 0) return ThresholdedProbs::unmodified(p.pi);

    // Ascending order makes the accepted prefix self-consistent:
    // pi_(j-1) <= pi_(j) <= 1/(j+1) <= 1/j for every accepted j.
    assert(k_chosen == 1 || sorted[k_chosen - 2] <= 1.0 / static_cast<double>(k_chosen));

    const double a = sorted[k_chosen - 1];
    ThresholdedProbs tp;
    tp.pi = p.pi;
    tp.k_chosen = k_chosen;
    tp.a = a;
    tp.pi_star.resize(n_units);
    tp.in_u2.resize(n_units);
    for (std::size_t k = 0; k < n_units; ++k) {
        const bool low = p.pi[k] <= a;
        tp.in_u2[k] = low ? 1 : 0;
        tp.pi_star[k] = low ? a : p.pi[k];
    }
    return tp;
}

/// Hard threshold at an externally supplied value: every pi_k <= a is raised
/// to a. K is recorded as |{k : pi_k <= a}|.
inline ThresholdedProbs apply_threshold(const InclusionProbs& p, double a) {
    if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("apply_threshold: threshold must lie in (0,1]");
    ThresholdedProbs tp;
    tp.pi = p.pi;
    tp.pi_star.resize(p.size());
    tp.in_u2.resize(p.size());
    std::size_t count = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const bool low = p.pi[k] <= a;
        tp.in_u2[k] = low ? 1 : 0;
        tp.pi_star[k] = low ? a : p.pi[k];
        count += low;
    }
    tp.k_chosen = count;
    if (count > 0) tp.a = a;
    return tp;
}

} // namespace survht
