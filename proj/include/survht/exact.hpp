#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "survht/designs.hpp"
#include "survht/estimators.hpp"
#include "survht/kahan.hpp"
#include "survht/threshold.hpp"

namespace survht {

/// Population-level moments of an estimator under the design.
struct ExactMoments {
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    EstimatorKind kind = EstimatorKind::ht;
};

/// Variance of the HT total given exact second-order probabilities:
/// sum_U Delta_kk / pi_k^2 y_k^2 + sumsum_{k!=l} Delta_kl / (pi_k pi_l) y_k y_l.
inline ExactMoments exact_moments_ht(std::span<const double> y, const InclusionProbs& p,
                                     const SecondOrderProvider& so) {
    if (!so.available())
        throw std::runtime_error("exact_moments_ht: second-order probabilities unknown");
    const std::size_t n_units = p.size();
    KahanSum var;
    for (std::size_t k = 0; k < n_units; ++k) {
        const double pik = p.pi[k];
        var.add(pik * (1.0 - pik) / (pik * pik) * y[k] * y[k]);
    }
    if (so.kind() != SecondOrderProvider::Kind::poisson) {
        for (std::size_t k = 0; k < n_units; ++k) {
            for (std::size_t l = 0; l < n_units; ++l) {
                if (k == l) continue;
                var.add(so.delta(k, l) / (p.pi[k] * p.pi[l]) * y[k] * y[l]);
            }
        }
    }
    ExactMoments m;
    m.kind = EstimatorKind::ht;
    m.bias = 0.0;
    m.variance = var.value();
    m.mse = m.variance;
    return m;
}

/// Bias, variance and MSE of the IHT total. The weights use the modified
/// probabilities while Delta keeps the original design's pi and pi_kl.
inline ExactMoments exact_moments_iht(std::span<const double> y, const ThresholdedProbs& tp,
                                      const SecondOrderProvider& so) {
    if (!so.available())
        throw std::runtime_error("exact_moments_iht: second-order probabilities unknown");
    const std::size_t n_units = tp.size();
    KahanSum bias;
    if (tp.a) {
        const double a = *tp.a;
        for (std::size_t k = 0; k < n_units; ++k)
            if (tp.in_u2[k]) bias.add((tp.pi[k] / a - 1.0) * y[k]);
    }
    KahanSum var;
    for (std::size_t k = 0; k < n_units; ++k) {
        const double w = tp.pi_star[k];
        var.add(tp.pi[k] * (1.0 - tp.pi[k]) / (w * w) * y[k] * y[k]);
    }
    if (so.kind() != SecondOrderProvider::Kind::poisson) {
        for (std::size_t k = 0; k < n_units; ++k) {
            for (std::size_t l = 0; l < n_units; ++l) {
                if (k == l) continue;
                var.add(so.delta(k, l) / (tp.pi_star[k] * tp.pi_star[l]) * y[k] * y[l]);
            }
        }
    }
    ExactMoments m;
    m.kind = EstimatorKind::iht;
    m.bias = bias.value();
    m.variance = var.value();
    m.mse = m.bias * m.bias + m.variance;
    return m;
}

inline constexpr std::size_t kMaxPoissonEnumUnits = 20;
inline constexpr std::uint64_t kMaxSrsworEnumSubsets = 1'000'000;

/// Exhaustive outcome distribution of a design, with per-outcome estimator
/// values. Outcomes are stored flat: units(i) is the i-th sampled index set.
struct OutcomeTable {
    std::size_t n_units = 0;
    std::vector<std::uint32_t> unit_data;
    std::vector<std::size_t> offsets{0};
    std::vector<double> probability;
    std::vector<double> ht;
    std::vector<double> iht;       ///< empty unless thresholded probs supplied
    std::vector<double> mse_hat;   ///< empty unless thresholded probs supplied

    [[nodiscard]] std::size_t size() const { return probability.size(); }

    [[nodiscard]] std::span<const std::uint32_t> units(std::size_t i) const {
        return {unit_data.data() + offsets[i], unit_data.data() + offsets[i + 1]};
    }

    /// Total probability mass; 1 within 1e-12 for a valid enumeration.
    [[nodiscard]] double mass() const {
        KahanSum acc;
        for (double p : probability) acc.add(p);
        return acc.value();
    }

    [[nodiscard]] double expectation(std::span<const double> values) const {
        KahanSum acc;
        for (std::size_t i = 0; i < size(); ++i) acc.add(probability[i] * values[i]);
        return acc.value();
    }

    /// Two-pass moments of an estimator column against a known truth.
    [[nodiscard]] ExactMoments moments(std::span<const double> values, double truth,
                                       EstimatorKind kind) const {
        const double mean = expectation(values);
        KahanSum var, mse;
        for (std::size_t i = 0; i < size(); ++i) {
            const double dm = values[i] - mean;
            const double dt = values[i] - truth;
            var.add(probability[i] * dm * dm);
            mse.add(probability[i] * dt * dt);
        }
        ExactMoments m;
        m.kind = kind;
        m.bias = mean - truth;
        m.variance = var.value();
        m.mse = mse.value();
        return m;
    }
};

namespace detail {

inline void push_outcome(OutcomeTable& table, const Sample& s, double prob,
                         std::span<const double> y, const InclusionProbs& p,
                         const ThresholdedProbs* tp, const SecondOrderProvider* so) {
    for (std::size_t k : s.indices) table.unit_data.push_back(static_cast<std::uint32_t>(k));
    table.offsets.push_back(table.unit_data.size());
    table.probability.push_back(prob);
    table.ht.push_back(ht_total(s, y, p));
    if (tp != nullptr) {
        table.iht.push_back(iht_total(s, y, *tp));
        table.mse_hat.push_back(mse_hat_iht(s, y, *tp, *so));
    }
}

} // namespace detail

/// All 2^N Poisson outcomes. When thresholded probabilities are supplied the
/// table also carries the IHT estimate and the Eq.-style MSE estimator value
/// for every outcome.
inline OutcomeTable enumerate_poisson(const InclusionProbs& p, std::span<const double> y,
                                      const ThresholdedProbs* tp = nullptr) {
    const std::size_t n_units = p.size();
    if (n_units > kMaxPoissonEnumUnits)
        throw std::invalid_argument("enumerate_poisson: population exceeds the 2^20 outcome cap");
    const SecondOrderProvider so = SecondOrderProvider::poisson(p.pi);

    OutcomeTable table;
    table.n_units = n_units;
    const std::uint64_t n_outcomes = std::uint64_t{1} << n_units;
    Sample s;
    for (std::uint64_t mask = 0; mask < n_outcomes; ++mask) {
        s.indices.clear();
        double prob = 1.0;
        for (std::size_t k = 0; k < n_units; ++k) {
            if (mask & (std::uint64_t{1} << k)) {
                prob *= p.pi[k];
                s.indices.push_back(k);
            } else {
                prob *= 1.0 - p.pi[k];
            }
        }
        detail::push_outcome(table, s, prob, y, p, tp, &so);
    }
    return table;
}

/// Number of n-subsets of N units, as a checked 64-bit count.
inline std::uint64_t subset_count(std::size_t n_units, std::size_t n) {
    if (n > n_units) return 0;
    n = std::min(n, n_units - n);
    std::uint64_t c = 1;
    for (std::size_t t = 1; t <= n; ++t) {
        if (c > (std::uint64_t{1} << 62) / (n_units - n + t))
            throw std::invalid_argument("subset_count: overflow");
        c = c * (n_units - n + t) / t;
    }
    return c;
}

/// All C(N,n) equally likely SRSWOR outcomes.
inline OutcomeTable enumerate_srswor(std::size_t n_units, std::size_t n, std::span<const double> y,
                                     const ThresholdedProbs* tp = nullptr) {
    if (n > n_units) throw std::invalid_argument("enumerate_srswor: n exceeds population size");
    const std::uint64_t n_subsets = subset_count(n_units, n);
    if (n_subsets > kMaxSrsworEnumSubsets)
        throw std::invalid_argument("enumerate_srswor: subset count exceeds the 10^6 cap");

    InclusionProbs p;
    p.pi.assign(n_units, static_cast<double>(n) / static_cast<double>(n_units));
    p.target_n = static_cast<double>(n);
    const SecondOrderProvider so = SecondOrderProvider::srswor(n_units, n);
    const double prob = 1.0 / static_cast<double>(n_subsets);

    OutcomeTable table;
    table.n_units = n_units;
    Sample s;
    s.indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.indices[i] = i;
    while (true) {
        detail::push_outcome(table, s, prob, y, p, tp, &so);
        // next combination in lexicographic order
        std::size_t i = n;
        while (i > 0 && s.indices[i - 1] == n_units - n + i - 1) --i;
        if (i == 0) break;
        ++s.indices[i - 1];
        for (std::size_t j = i; j < n; ++j) s.indices[j] = s.indices[j - 1] + 1;
    }
    return table;
}

/// Dispatcher mirroring the CLI design descriptor.
inline OutcomeTable enumerate_design(DesignKind design, const InclusionProbs& p,
                                     std::span<const double> y,
                                     const ThresholdedProbs* tp = nullptr) {
    switch (design) {
        case DesignKind::poisson: return enumerate_poisson(p, y, tp);
        case DesignKind::srswor: {
            const auto n = static_cast<std::size_t>(std::llround(p.target_n));
            return enumerate_srswor(p.size(), n, y, tp);
        }
        default: throw std::invalid_argument("enumerate_design: enumeration requires poisson or srswor");
    }
}

namespace detail {

/// Compensated accumulation into a flat array of slots.
class KahanArray {
  public:
    explicit KahanArray(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    void add(std::size_t idx, double x) {
        const double s = sum_[idx];
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            comp_[idx] += (s - t) + x;
        else
            comp_[idx] += (x - t) + s;
        sum_[idx] = t;
    }

    [[nodiscard]] double value(std::size_t idx) const { return sum_[idx] + comp_[idx]; }
    [[nodiscard]] std::size_t size() const { return sum_.size(); }

  private:
    std::vector<double> sum_, comp_;
};

} // namespace detail

/// Joint inclusion probabilities up to order 4, indexed by distinct unit
/// tuples (order of indices does not matter).
struct InclusionOrders {
    std::size_t n_units = 0;
    int max_order = 2;
    std::vector<double> o1, o2, o3, o4; ///< dense, sorted-tuple slots filled

    [[nodiscard]] double pi(std::size_t i) const { return o1[i]; }

    [[nodiscard]] double pi2(std::size_t i, std::size_t j) const {
        require(2, i != j);
        if (i > j) std::swap(i, j);
        return o2[i * n_units + j];
    }

    [[nodiscard]] double pi3(std::size_t i, std::size_t j, std::size_t k) const {
        require(3, i != j && i != k && j != k);
        std::array<std::size_t, 3> t{i, j, k};
        std::sort(t.begin(), t.end());
        return o3[(t[0] * n_units + t[1]) * n_units + t[2]];
    }

    [[nodiscard]] double pi4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        require(4, i != j && i != k && i != l && j != k && j != l && k != l);
        std::array<std::size_t, 4> t{i, j, k, l};
        std::sort(t.begin(), t.end());
        return o4[((t[0] * n_units + t[1]) * n_units + t[2]) * n_units + t[3]];
    }

  private:
    void require(int order, bool distinct) const {
        if (order > max_order)
            throw std::invalid_argument("inclusion_orders: order not computed");
        if (!distinct) throw std::invalid_argument("inclusion_orders: indices must be distinct");
    }
};

/// Exhaustive-enumeration oracle for joint inclusion probabilities: walks the
/// full outcome distribution and accumulates P(outcome) into every sampled
/// tuple slot, with compensated summation.
inline InclusionOrders inclusion_orders(DesignKind design, const InclusionProbs& p, int up_to) {
    if (up_to < 2 || up_to > 4)
        throw std::invalid_argument("inclusion_orders: up_to must be 2, 3 or 4");
    const std::size_t n_units = p.size();

    InclusionOrders orders;
    orders.n_units = n_units;
    orders.max_order = up_to;

    detail::KahanArray a1(n_units), a2(n_units * n_units);
    detail::KahanArray a3(up_to >= 3 ? n_units * n_units * n_units : 0);
    detail::KahanArray a4(up_to >= 4 ? n_units * n_units * n_units * n_units : 0);

    std::vector<double> dummy_y(n_units, 0.0);
    const OutcomeTable table = enumerate_design(design, p, dummy_y);
    for (std::size_t o = 0; o < table.size(); ++o) {
        const auto units = table.units(o);
        const double prob = table.probability[o];
        for (std::size_t ai = 0; ai < units.size(); ++ai) {
            const std::size_t i = units[ai];
            a1.add(i, prob);
            for (std::size_t bi = ai + 1; bi < units.size(); ++bi) {
                const std::size_t j = units[bi];
                a2.add(i * n_units + j, prob);
                if (up_to < 3) continue;
                for (std::size_t ci = bi + 1; ci < units.size(); ++ci) {
                    const std::size_t k = units[ci];
                    a3.add((i * n_units + j) * n_units + k, prob);
                    if (up_to < 4) continue;
                    for (std::size_t di = ci + 1; di < units.size(); ++di) {
                        const std::size_t l = units[di];
                        a4.add(((i * n_units + j) * n_units + k) * n_units + l, prob);
                    }
                }
            }
        }
    }

    orders.o1.resize(n_units);
    for (std::size_t i = 0; i < n_units; ++i) orders.o1[i] = a1.value(i);
    orders.o2.resize(a2.size());
    for (std::size_t i = 0; i < a2.size(); ++i) orders.o2[i] = a2.value(i);
    if (up_to >= 3) {
        orders.o3.resize(a3.size());
        for (std::size_t i = 0; i < a3.size(); ++i) orders.o3[i] = a3.value(i);
    }
    if (up_to >= 4) {
        orders.o4.resize(a4.size());
        for (std::size_t i = 0; i < a4.size(); ++i) orders.o4[i] = a4.value(i);
    }
    return orders;
}

/// SRSWOR joint inclusion probability of a given order:
/// n(n-1)...(n-m+1) / (N(N-1)...(N-m+1)).
inline double srswor_joint_prob(std::size_t n_units, std::size_t n, int order) {
    double v = 1.0;
    for (int t = 0; t < order; ++t)
        v *= static_cast<double>(n - static_cast<std::size_t>(t)) /
             static_cast<double>(n_units - static_cast<std::size_t>(t));
    return v;
}

/// Closed form for pi_ijk - pi_ij pi_k under SRSWOR.
inline double srswor_third_order_gap(std::size_t n_units, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double nu = static_cast<double>(n_units);
    return -2.0 * nn * (nn - 1.0) * (nu - nn) / (nu * nu * (nu - 1.0) * (nu - 2.0));
}

/// Closed form for pi_ijkl - 4 pi_ijk pi_l + 6 pi_ij pi_k pi_l - 3 pi_i pi_j pi_k pi_l
/// under SRSWOR, as the telescoped three-term sum.
inline double srswor_c4_fourth_combination(std::size_t n_units, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double nu = static_cast<double>(n_units);
    const double t1 = 3.0 * nn * (nn - 1.0) * (nn - 2.0) * (nn - nu) /
                      (nu * nu * (nu - 1.0) * (nu - 2.0) * (nu - 3.0));
    const double t2 = -6.0 * nn * nn * (nn - 1.0) * (nn - nu) /
                      (nu * nu * nu * (nu - 1.0) * (nu - 2.0));
    const double t3 = 3.0 * nn * nn * nn * (nn - nu) / (nu * nu * nu * nu * (nu - 1.0));
    return t1 + t2 + t3;
}

/// Third- and fourth-order decay quantities of Condition C.4.
struct ConditionC4Report {
    double third_order_gap = 0.0;           ///< max over tuples of pi_ijk - pi_ij pi_k
    double fourth_order_combination = 0.0;  ///< max over tuples of the 4th-order expression
    double enum_second_max_abs_err = 0.0;   ///< enumeration cross-check vs analytic joints
    double enum_third_max_abs_err = 0.0;
    double enum_fourth_max_abs_err = 0.0;
    bool pass = false;
};

/// Evaluates Condition C.4's quantities. Independence makes both identically
/// zero under Poisson sampling; under SRSWOR every tuple attains the same
/// closed-form value. An exhaustive enumeration cross-checks the analytic
/// joint probabilities when the outcome space is within the caps.
inline ConditionC4Report check_condition_c4(DesignKind design, const InclusionProbs& p) {
    ConditionC4Report report;
    const std::size_t n_units = p.size();
    const auto n = static_cast<std::size_t>(std::llround(p.target_n));

    if (design == DesignKind::poisson) {
        report.third_order_gap = 0.0;
        report.fourth_order_combination = 0.0;
    } else if (design == DesignKind::srswor) {
        // Census (n = N) comes out as zero through the (N - n) factors.
        report.third_order_gap = (n_units >= 3) ? srswor_third_order_gap(n_units, n) : 0.0;
        report.fourth_order_combination =
            (n_units >= 4) ? srswor_c4_fourth_combination(n_units, n) : 0.0;
    } else {
        throw std::invalid_argument("check_condition_c4: requires poisson or srswor");
    }

    // Enumeration cross-check of the analytic joint probabilities.
    const int up_to = (n_units >= 4) ? 4 : (n_units == 3 ? 3 : 2);
    const InclusionOrders enumerated = inclusion_orders(design, p, up_to);
    auto analytic2 = [&](std::size_t i, std::size_t j) {
        return design == DesignKind::poisson ? p.pi[i] * p.pi[j] : srswor_joint_prob(n_units, n, 2);
    };
    auto analytic3 = [&](std::size_t i, std::size_t j, std::size_t k) {
        return design == DesignKind::poisson ? p.pi[i] * p.pi[j] * p.pi[k]
                                             : srswor_joint_prob(n_units, n, 3);
    };
    auto analytic4 = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return design == DesignKind::poisson ? p.pi[i] * p.pi[j] * p.pi[k] * p.pi[l]
                                             : srswor_joint_prob(n_units, n, 4);
    };
    for (std::size_t i = 0; i < n_units; ++i) {
        for (std::size_t j = i + 1; j < n_units; ++j) {
            report.enum_second_max_abs_err = std::max(
                report.enum_second_max_abs_err, std::abs(enumerated.pi2(i, j) - analytic2(i, j)));
            if (up_to < 3) continue;
            for (std::size_t k = j + 1; k < n_units; ++k) {
                report.enum_third_max_abs_err =
                    std::max(report.enum_third_max_abs_err,
                             std::abs(enumerated.pi3(i, j, k) - analytic3(i, j, k)));
                if (up_to < 4) continue;
                for (std::size_t l = k + 1; l < n_units; ++l) {
                    report.enum_fourth_max_abs_err =
                        std::max(report.enum_fourth_max_abs_err,
                                 std::abs(enumerated.pi4(i, j, k, l) - analytic4(i, j, k, l)));
                }
            }
        }
    }
    const double tol = 1e-13;
    report.pass = report.enum_second_max_abs_err <= tol &&
                  report.enum_third_max_abs_err <= tol && report.enum_fourth_max_abs_err <= tol;
    return report;
}

/// Deterministic random instance used by the oracle harness: y in (0,1],
/// pi in [0.05, 0.95].
inline std::pair<std::vector<double>, InclusionProbs> make_random_instance(std::size_t n_units,
                                                                           std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<double> y(n_units), pi(n_units);
    for (std::size_t k = 0; k < n_units; ++k) y[k] = 1.0 - rng.uniform01();
    for (std::size_t k = 0; k < n_units; ++k) pi[k] = rng.uniform(0.05, 0.95);
    return {std::move(y), InclusionProbs::from_pi(std::move(pi))};
}

} // namespace survht
