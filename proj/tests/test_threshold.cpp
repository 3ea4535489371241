#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "survht/rng.hpp"
#include "survht/threshold.hpp"

using namespace survht;

namespace {

std::vector<double> example1_pi() {
    std::vector<double> pi;
    for (int i = 0; i < 1000; ++i) pi.push_back(0.2);
    for (int i = 0; i < 1000; ++i) pi.push_back(0.001);
    for (int i = 0; i < 1000; ++i) pi.push_back(0.08);
    return pi;
}

} // namespace

TEST_CASE("choose_k: no qualifying order statistic leaves pi unchanged") {
    const InclusionProbs p = InclusionProbs::from_pi({0.6, 0.7, 0.8});
    const ThresholdedProbs tp = choose_k(p);
    CHECK(tp.k_chosen == 0);
    CHECK_FALSE(tp.a.has_value());
    CHECK(tp.pi_star == p.pi);
    CHECK(tp.u2_size() == 0);
}

TEST_CASE("choose_k: direct execution on (0.1, 0.2, 0.3, 0.9)") {
    // j=1: 0.1 <= 1/2; j=2: 0.2 <= 1/3; j=3: 0.3 > 1/4 -> K=2, a=0.2
    const InclusionProbs p = InclusionProbs::from_pi({0.1, 0.2, 0.3, 0.9});
    const ThresholdedProbs tp = choose_k(p);
    CHECK(tp.k_chosen == 2);
    REQUIRE(tp.a.has_value());
    CHECK(*tp.a == 0.2);
    CHECK(tp.pi_star == std::vector<double>{0.2, 0.2, 0.3, 0.9});
    CHECK(tp.u2_size() == 2);
    CHECK(tp.modified_count() == 1);
}

TEST_CASE("choose_k: direct execution on the illustrative block probabilities") {
    // sorted: 0.001 x1000, 0.08 x1000, 0.2 x1000. 0.001 <= 1/(j+1) holds up
    // to j=999 (1/1000 = 0.001) and fails at j=1000 (1/1001 < 0.001), so
    // K=999, a=0.001 and the vector is left unmodified; the a=0.08 variant
    // used in the illustration is a manual threshold, not this selection.
    const InclusionProbs p = InclusionProbs::from_pi(example1_pi());
    const ThresholdedProbs tp = choose_k(p);
    CHECK(tp.k_chosen == 999);
    REQUIRE(tp.a.has_value());
    CHECK(*tp.a == 0.001);
    CHECK(tp.pi_star == p.pi);
    CHECK(tp.u2_size() == 1000);  // ties at the threshold widen U2 past K
    CHECK(tp.modified_count() == 0);
}

TEST_CASE("choose_k: ties at the threshold are all assigned to U2") {
    const InclusionProbs p = InclusionProbs::from_pi({0.3, 0.3, 0.3, 0.9});
    const ThresholdedProbs tp = choose_k(p);
    CHECK(tp.k_chosen == 2);  // j=3 fails: 0.3 > 1/4
    CHECK(*tp.a == 0.3);
    CHECK(tp.u2_size() == 3);
    CHECK(tp.pi_star == p.pi);  // raising 0.3 to 0.3 changes nothing
}

TEST_CASE("apply_threshold: manual 0.08 on the block probabilities") {
    const InclusionProbs p = InclusionProbs::from_pi(example1_pi());
    const ThresholdedProbs tp = apply_threshold(p, 0.08);
    REQUIRE(tp.a.has_value());
    CHECK(*tp.a == 0.08);
    CHECK(tp.k_chosen == 2000);
    CHECK(tp.u2_size() == 2000);
    CHECK(tp.modified_count() == 1000);
    for (int i = 0; i < 1000; ++i) {
        CHECK(tp.pi_star[i] == 0.2);
        CHECK(tp.pi_star[1000 + i] == 0.08);
        CHECK(tp.pi_star[2000 + i] == 0.08);
    }
}

TEST_CASE("apply_threshold: boundary thresholds") {
    const InclusionProbs p = InclusionProbs::from_pi({0.2, 0.4, 0.6});
    const ThresholdedProbs below = apply_threshold(p, 0.1);
    CHECK(below.pi_star == p.pi);
    CHECK(below.u2_size() == 0);
    CHECK_FALSE(below.a.has_value());

    const ThresholdedProbs at_min = apply_threshold(p, 0.2);
    CHECK(at_min.u2_size() == 1);
    CHECK(at_min.pi_star == p.pi);

    const ThresholdedProbs at_max = apply_threshold(p, 0.6);
    CHECK(at_max.pi_star == std::vector<double>{0.6, 0.6, 0.6});

    CHECK_THROWS_AS(apply_threshold(p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(apply_threshold(p, 1.5), std::invalid_argument);
}

TEST_CASE("threshold properties on random probability vectors") {
    CounterRng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n_units = 2 + rng.uniform_below(40);
        std::vector<double> pi(n_units);
        for (auto& v : pi) v = std::pow(10.0, rng.uniform(-4.0, 0.0));
        for (auto& v : pi) v = std::min(v, 1.0);
        const InclusionProbs p = InclusionProbs::from_pi(pi);
        const ThresholdedProbs tp = choose_k(p);

        double sum_pi = 0.0, sum_star = 0.0;
        for (std::size_t k = 0; k < n_units; ++k) {
            REQUIRE(tp.pi_star[k] >= p.pi[k]);  // thresholding only raises
            sum_pi += p.pi[k];
            sum_star += tp.pi_star[k];
        }
        REQUIRE(sum_star >= sum_pi);

        if (tp.k_chosen >= 1) {
            REQUIRE(*tp.a <= 1.0 / (static_cast<double>(tp.k_chosen) + 1.0));
            REQUIRE(tp.u2_size() >= tp.k_chosen);
        }

        // idempotence: re-running the selection on pi_star changes nothing
        const ThresholdedProbs again = choose_k(InclusionProbs::from_pi(tp.pi_star));
        REQUIRE(again.pi_star == tp.pi_star);

        // permutation equivariance
        std::vector<std::size_t> perm(n_units);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n_units; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
        std::vector<double> permuted(n_units);
        for (std::size_t k = 0; k < n_units; ++k) permuted[k] = p.pi[perm[k]];
        const ThresholdedProbs ptp = choose_k(InclusionProbs::from_pi(permuted));
        for (std::size_t k = 0; k < n_units; ++k) REQUIRE(ptp.pi_star[k] == tp.pi_star[perm[k]]);
    }
}
