#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "survht/kahan.hpp"
#include "survht/rng.hpp"

namespace survht {

enum class DesignKind { poisson, srswor, pips, ppswr };

inline std::string to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::poisson: return "poisson";
        case DesignKind::srswor: return "srswor";
        case DesignKind::pips: return "pips";
        case DesignKind::ppswr: return "ppswr";
    }
    throw std::invalid_argument("unknown design kind");
}

inline DesignKind design_from_string(const std::string& s) {
    if (s == "poisson") return DesignKind::poisson;
    if (s == "srswor") return DesignKind::srswor;
    if (s == "pips") return DesignKind::pips;
    if (s == "ppswr") return DesignKind::ppswr;
    throw std::invalid_argument("unknown design '" + s + "' (expected poisson|srswor|pips|ppswr)");
}

/// First-order inclusion probabilities. Each pi_k lies in (0,1] and the
/// vector sums to the expected sample size.
struct InclusionProbs {
    std::vector<double> pi;
    double target_n = 0.0;

    [[nodiscard]] std::size_t size() const { return pi.size(); }

    static InclusionProbs from_pi(std::vector<double> pi) {
        InclusionProbs p;
        p.pi = std::move(pi);
        KahanSum total;
        for (double v : p.pi) {
            if (!(v > 0.0 && v <= 1.0))
                throw std::invalid_argument("inclusion probabilities must lie in (0,1]");
            total.add(v);
        }
        p.target_n = total.value();
        return p;
    }
};

/// Drawn sample as a sorted, duplicate-free set of 0-based unit indices.
struct Sample {
    std::vector<std::size_t> indices;

    [[nodiscard]] std::size_t size() const { return indices.size(); }
    [[nodiscard]] bool contains(std::size_t k) const {
        return std::binary_search(indices.begin(), indices.end(), k);
    }

    void normalize(std::size_t n_units) {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        if (!indices.empty() && indices.back() >= n_units)
            throw std::invalid_argument("sample index out of range");
    }
};

/// pi_k = n x_k / sum(x), clamped at 1 with the remainder rescaled until the
/// vector both sums to n and stays within (0,1]. The fixed point is reached in
/// at most N passes because the clamped set only grows.
inline InclusionProbs pi_from_sizes(std::span<const double> sizes, std::size_t n) {
    const std::size_t n_units = sizes.size();
    if (n_units == 0) throw std::invalid_argument("pi_from_sizes: empty size vector");
    if (n == 0) throw std::invalid_argument("pi_from_sizes: n must be at least 1");
    if (n > n_units) throw std::invalid_argument("pi_from_sizes: n exceeds population size");
    for (double v : sizes)
        if (!(v > 0.0)) throw std::invalid_argument("pi_from_sizes: sizes must be positive");

    std::vector<double> pi(n_units, 0.0);
    std::vector<bool> clamped(n_units, false);
    std::size_t n_clamped = 0;
    while (true) {
        KahanSum free_total;
        for (std::size_t k = 0; k < n_units; ++k)
            if (!clamped[k]) free_total.add(sizes[k]);
        const double budget = static_cast<double>(n - n_clamped);
        bool changed = false;
        for (std::size_t k = 0; k < n_units; ++k) {
            if (clamped[k]) continue;
            pi[k] = budget * sizes[k] / free_total.value();
            if (pi[k] >= 1.0) {
                pi[k] = 1.0;
                clamped[k] = true;
                ++n_clamped;
                changed = true;
            }
        }
        if (!changed) break;
    }
    InclusionProbs p;
    p.pi = std::move(pi);
    p.target_n = static_cast<double>(n);
    return p;
}

/// Poisson sampling: independent Bernoulli(pi_k) inclusion; random size.
inline Sample draw_poisson(std::span<const double> pi, CounterRng& rng) {
    Sample s;
    for (std::size_t k = 0; k < pi.size(); ++k)
        if (rng.uniform01() < pi[k]) s.indices.push_back(k);
    return s;
}

inline Sample draw_poisson(const InclusionProbs& p, CounterRng& rng) {
    return draw_poisson(std::span<const double>(p.pi), rng);
}

/// Simple random sampling without replacement via a partial Fisher-Yates
/// shuffle; every n-subset is equally likely.
inline Sample draw_srswor(std::size_t n_units, std::size_t n, CounterRng& rng) {
    if (n > n_units) throw std::invalid_argument("draw_srswor: n exceeds population size");
    std::vector<std::size_t> units(n_units);
    std::iota(units.begin(), units.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_below(n_units - i);
        std::swap(units[i], units[j]);
    }
    Sample s;
    s.indices.assign(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(s.indices.begin(), s.indices.end());
    return s;
}

/// Randomized-order systematic piPS sampling: permute units, take cumulative
/// sums of pi, and select the units whose interval contains u + j for
/// j = 0..n-1. Fixed size n = sum(pi); first-order probabilities are exact.
inline Sample draw_pips_systematic(const InclusionProbs& p, CounterRng& rng) {
    const std::size_t n_units = p.size();
    const double n_real = std::round(p.target_n);
    if (std::abs(p.target_n - n_real) > 1e-9)
        throw std::invalid_argument("draw_pips_systematic: sum of pi must be an integer");
    const auto n = static_cast<std::size_t>(n_real);

    std::vector<std::size_t> order(n_units);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n_units; i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(order[i - 1], order[j]);
    }

    const double u = rng.uniform01();
    Sample s;
    s.indices.reserve(n);
    KahanSum cum;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n_units && j < n; ++i) {
        const double upper = (i + 1 == n_units) ? n_real : (cum.add(p.pi[order[i]]), cum.value());
        if (u + static_cast<double>(j) < upper) {
            s.indices.push_back(order[i]);
            ++j;
        }
    }
    // Cumulative rounding can leave the last target fractionally outside the
    // final interval; the loop above pins the last boundary to n exactly.
    std::sort(s.indices.begin(), s.indices.end());
    return s;
}

/// With-replacement PPS draw list plus the derived distinct-unit view.
struct PpsDraw {
    std::vector<std::size_t> draws;     ///< m draws in draw order, with multiplicity.
    Sample distinct;                    ///< de-duplicated index set.
    std::vector<double> draw_prob;      ///< per-draw selection probabilities p_k.
    std::vector<double> inclusion_pi;   ///< pi_k = 1 - (1 - p_k)^m for HT-style use.
};

inline PpsDraw draw_pps_wr(std::span<const double> sizes, std::size_t m, CounterRng& rng) {
    if (m == 0) throw std::invalid_argument("draw_pps_wr: m must be at least 1");
    const std::size_t n_units = sizes.size();
    if (n_units == 0) throw std::invalid_argument("draw_pps_wr: empty size vector");
    for (double v : sizes)
        if (!(v > 0.0)) throw std::invalid_argument("draw_pps_wr: sizes must be positive");

    PpsDraw result;
    result.draw_prob.resize(n_units);
    const double total = kahan_total(sizes);
    std::vector<double> cum(n_units);
    KahanSum acc;
    for (std::size_t k = 0; k < n_units; ++k) {
        result.draw_prob[k] = sizes[k] / total;
        acc.add(result.draw_prob[k]);
        cum[k] = acc.value();
    }
    cum.back() = 1.0;

    result.draws.reserve(m);
    for (std::size_t d = 0; d < m; ++d) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        result.draws.push_back(static_cast<std::size_t>(it - cum.begin()));
    }
    result.distinct.indices = result.draws;
    result.distinct.normalize(n_units);

    result.inclusion_pi.resize(n_units);
    for (std::size_t k = 0; k < n_units; ++k)
        result.inclusion_pi[k] = 1.0 - std::pow(1.0 - result.draw_prob[k], static_cast<double>(m));
    return result;
}

/// Exact second-order (joint) inclusion probabilities where the design admits
/// them analytically, or an explicit matrix for enumerated designs.
class SecondOrderProvider {
  public:
    enum class Kind { poisson, srswor, enumerated, unavailable };

    static SecondOrderProvider poisson(std::vector<double> pi) {
        SecondOrderProvider p;
        p.kind_ = Kind::poisson;
        p.pi_ = std::move(pi);
        return p;
    }

    static SecondOrderProvider srswor(std::size_t n_units, std::size_t n) {
        if (n > n_units) throw std::invalid_argument("second_order: n exceeds population size");
        SecondOrderProvider p;
        p.kind_ = Kind::srswor;
        p.pi_.assign(n_units, static_cast<double>(n) / static_cast<double>(n_units));
        const auto nn = static_cast<double>(n);
        const auto nu = static_cast<double>(n_units);
        p.srswor_joint_ = (n_units < 2) ? 0.0 : nn * (nn - 1.0) / (nu * (nu - 1.0));
        return p;
    }

    /// Dense joint matrix, row-major N x N with pi_k on the diagonal.
    static SecondOrderProvider enumerated(std::vector<double> pi, std::vector<double> joint) {
        SecondOrderProvider p;
        if (joint.size() != pi.size() * pi.size())
            throw std::invalid_argument("second_order: joint matrix must be N x N");
        p.kind_ = Kind::enumerated;
        p.pi_ = std::move(pi);
        p.joint_ = std::move(joint);
        return p;
    }

    static SecondOrderProvider none() { return SecondOrderProvider{}; }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool available() const { return kind_ != Kind::unavailable; }
    [[nodiscard]] std::size_t size() const { return pi_.size(); }

    [[nodiscard]] double first(std::size_t k) const {
        require_available();
        return pi_[k];
    }

    /// pi_kl for k != l; falls back to pi_k on the diagonal.
    [[nodiscard]] double joint(std::size_t k, std::size_t l) const {
        require_available();
        if (k == l) return pi_[k];
        switch (kind_) {
            case Kind::poisson: return pi_[k] * pi_[l];
            case Kind::srswor: return srswor_joint_;
            case Kind::enumerated: return joint_[k * pi_.size() + l];
            case Kind::unavailable: break;
        }
        throw std::runtime_error("second-order probabilities unknown for this design");
    }

    /// Delta_kl = pi_kl - pi_k pi_l; Delta_kk = pi_k (1 - pi_k).
    [[nodiscard]] double delta(std::size_t k, std::size_t l) const {
        require_available();
        if (k == l) return pi_[k] * (1.0 - pi_[k]);
        return joint(k, l) - pi_[k] * pi_[l];
    }

  private:
    void require_available() const {
        if (kind_ == Kind::unavailable)
            throw std::runtime_error("second-order probabilities unknown for this design");
    }

    Kind kind_ = Kind::unavailable;
    std::vector<double> pi_;
    std::vector<double> joint_;
    double srswor_joint_ = 0.0;
};

/// Provider factory for a named design; pips and ppswr have no closed-form
/// joint probabilities and yield an unavailable provider.
inline SecondOrderProvider second_order(DesignKind design, const InclusionProbs& p) {
    switch (design) {
        case DesignKind::poisson: return SecondOrderProvider::poisson(p.pi);
        case DesignKind::srswor: {
            const auto n = static_cast<std::size_t>(std::llround(p.target_n));
            return SecondOrderProvider::srswor(p.size(), n);
        }
        case DesignKind::pips:
        case DesignKind::ppswr: return SecondOrderProvider::none();
    }
    throw std::invalid_argument("unknown design kind");
}

} // namespace survht
