#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "survht/rng.hpp"

using survht::CounterRng;

TEST_CASE("counter rng is a pure function of seed and counter") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

    CounterRng c(43);
    bool all_equal = true;
    CounterRng a2(42);
    for (int i = 0; i < 16; ++i) all_equal = all_equal && (a2.next_u64() == c.next_u64());
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("derived streams are independent of parent consumption") {
    CounterRng parent(7);
    const CounterRng before = parent.derive(3, 5);
    parent.next_u64();
    parent.next_u64();
    CounterRng after = parent.derive(3, 5);
    CounterRng b0 = before;
    for (int i = 0; i < 64; ++i) REQUIRE(b0.next_u64() == after.next_u64());

    CounterRng other = parent.derive(3, 6);
    CounterRng b1 = before;
    bool same = true;
    for (int i = 0; i < 16; ++i) same = same && (b1.next_u64() == other.next_u64());
    REQUIRE_FALSE(same);
}

TEST_CASE("uniform01 stays inside [0,1) and uniform_open01 inside (0,1)") {
    CounterRng rng(1);
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double v = rng.uniform_open01();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("normal quantile matches reference values") {
    // reference quantiles of the standard normal
    CHECK(CounterRng::normal_quantile(0.5) == 0.0);
    CHECK_THAT(CounterRng::normal_quantile(0.975),
               Catch::Matchers::WithinAbs(1.959963984540054, 1e-14));
    CHECK_THAT(CounterRng::normal_quantile(0.025),
               Catch::Matchers::WithinAbs(-1.959963984540054, 1e-14));
    CHECK_THAT(CounterRng::normal_quantile(0.84134474606854293),
               Catch::Matchers::WithinAbs(1.0, 1e-13));
    CHECK_THROWS_AS(CounterRng::normal_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(CounterRng::normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("normal quantile round-trips through the normal cdf") {
    double max_err = 0.0;
    for (int i = 1; i < 2000; ++i) {
        const double p = i / 2000.0;
        const double x = CounterRng::normal_quantile(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        max_err = std::max(max_err, std::abs(back - p));
    }
    // also deep in the tails
    for (double p : {1e-12, 1e-9, 1e-6, 1.0 - 1e-6, 1.0 - 1e-9}) {
        const double x = CounterRng::normal_quantile(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        max_err = std::max(max_err, std::abs(back - p) / p);
    }
    CHECK(max_err < 1e-12);
}

TEST_CASE("uniform_below covers the range without bias") {
    CounterRng rng(9);
    std::vector<int> counts(7, 0);
    const int reps = 70000;
    for (int i = 0; i < reps; ++i) counts[rng.uniform_below(7)]++;
    for (int c : counts) {
        CHECK(c > 10000 - 4 * 110);  // 4 sigma around 10000
        CHECK(c < 10000 + 4 * 110);
    }
    CHECK_THROWS_AS(rng.uniform_below(0), std::invalid_argument);
}
