#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "survht/montecarlo.hpp"

using namespace survht;

namespace {

std::string temp_csv(const std::string& name, std::size_t n_units, double z_value) {
    const std::string path =
        (std::filesystem::temp_directory_path() / ("survht_mctest_" + name)).string();
    std::ofstream out(path);
    out << "y,z,x\n";
    CounterRng rng(1234);
    for (std::size_t k = 0; k < n_units; ++k)
        out << 1.0 + rng.uniform01() << "," << z_value << ",1\n";
    return path;
}

MCConfig example1_config(std::uint64_t seed) {
    MCConfig cfg;
    cfg.example = 1;
    cfg.design = DesignKind::poisson;
    cfg.replicates = 2000;
    cfg.seed = seed;
    cfg.target = TargetKind::mean;
    cfg.threshold = ThresholdMode::manual;
    cfg.manual_a = 0.08;
    return cfg;
}

} // namespace

TEST_CASE("threshold mode none: both columns identical, re vanishes") {
    MCConfig cfg;
    cfg.example = 2;
    cfg.rho = 0.8;
    cfg.design = DesignKind::poisson;
    cfg.f = 0.05;
    cfg.replicates = 200;
    cfg.seed = 5;
    cfg.target = TargetKind::mean;
    cfg.threshold = ThresholdMode::none;

    const MCReport rep = run_mc(cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].mse == rep.rows[1].mse);
    CHECK(rep.rows[0].variance == rep.rows[1].variance);
    CHECK(rep.rows[0].bias == rep.rows[1].bias);
    CHECK(rep.re_percent == 0.0);
    CHECK(rep.k_used == 0);
    CHECK_FALSE(rep.a_used.has_value());
}

TEST_CASE("illustrative block configuration lands in the replication band") {
    const MCReport rep = run_mc(example1_config(1));
    CHECK(rep.re_percent > 20.0);
    CHECK(rep.re_percent < 55.0);
    CHECK(rep.rows[1].variance < rep.rows[0].variance);
    CHECK(rep.k_used == 2000);
    REQUIRE(rep.a_used.has_value());
    CHECK(*rep.a_used == 0.08);
    CHECK(rep.excluded_replicates == 0);
}

TEST_CASE("empirical mse agrees with the exact design variance") {
    MCConfig cfg;
    cfg.example = 2;
    cfg.rho = 0.8;
    cfg.design = DesignKind::poisson;
    cfg.f = 0.05;
    cfg.replicates = 4000;
    cfg.seed = 12;
    cfg.target = TargetKind::mean;
    cfg.threshold = ThresholdMode::none;
    cfg.workers = 2;
    const MCReport rep = run_mc(cfg);

    // rebuild the experiment's population and pi to evaluate the closed form
    const std::uint64_t pop_seed = CounterRng(cfg.seed).derive(detail::kPopulationStream).next_u64();
    const Population pop = gen_example2(cfg.rho, pop_seed);
    const InclusionProbs pi = pi_from_sizes(*pop.x, 150);
    const ExactMoments em =
        exact_moments_ht(pop.y, pi, SecondOrderProvider::poisson(pi.pi));
    const double exact_mean_scale = em.variance / (3000.0 * 3000.0);

    CHECK(std::abs(rep.rows[0].mse - exact_mean_scale) <= 5.0 * rep.rows[0].mse_se);
}

TEST_CASE("monte carlo reports are bit-identical across worker counts") {
    MCConfig cfg = example1_config(3);
    cfg.replicates = 500;
    cfg.workers = 1;
    const MCReport one = run_mc(cfg);
    cfg.workers = 4;
    const MCReport four = run_mc(cfg);

    REQUIRE(one.rows.size() == four.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        CHECK(one.rows[i].bias == four.rows[i].bias);
        CHECK(one.rows[i].bias_sq == four.rows[i].bias_sq);
        CHECK(one.rows[i].variance == four.rows[i].variance);
        CHECK(one.rows[i].mse == four.rows[i].mse);
        CHECK(one.rows[i].mse_se == four.rows[i].mse_se);
    }
    CHECK(one.re_percent == four.re_percent);
    CHECK(one.truth == four.truth);

    const MCReport again = run_mc(cfg);
    CHECK(again.rows[0].mse == four.rows[0].mse);
}

TEST_CASE("reported columns satisfy mse = bias^2 + variance") {
    MCConfig cfg;
    cfg.example = 4;
    cfg.rho1 = 0.7;
    cfg.rho2 = 0.8;
    cfg.design = DesignKind::pips;
    cfg.f = 0.05;
    cfg.replicates = 300;
    cfg.seed = 9;
    cfg.target = TargetKind::ratio;
    const MCReport rep = run_mc(cfg);
    for (const MCRow& row : rep.rows) {
        CHECK_THAT(row.mse,
                   Catch::Matchers::WithinRel(row.bias_sq + row.variance, 1e-12));
        CHECK_THAT(row.bias * row.bias, Catch::Matchers::WithinRel(row.bias_sq, 1e-12));
    }
}

TEST_CASE("empty poisson samples invalidate ratio replicates") {
    // pi = 0.5 over N = 4: P(empty) = 6.25%, far beyond the 1% exclusion cap
    const std::string many = temp_csv("many_empty.csv", 4, 2.0);
    MCConfig cfg;
    cfg.example = 0;
    cfg.csv_path = many;
    cfg.y_col = "y";
    cfg.z_col = "z";
    cfg.x_col = "x";
    cfg.design = DesignKind::poisson;
    cfg.n = 2;
    cfg.replicates = 400;
    cfg.seed = 2;
    cfg.target = TargetKind::ratio;
    cfg.threshold = ThresholdMode::none;
    CHECK_THROWS_AS(run_mc(cfg), std::runtime_error);

    // pi = 0.5 over N = 8: P(empty) ~ 0.39%, inside the cap; exclusions
    // are recorded instead of fatal
    const std::string few = temp_csv("few_empty.csv", 8, 2.0);
    cfg.csv_path = few;
    cfg.n = 4;
    cfg.replicates = 1000;
    cfg.seed = 4;
    const MCReport rep = run_mc(cfg);
    CHECK(rep.excluded_replicates >= 1);
    CHECK(rep.excluded_replicates <= 10);
    // the same draw never invalidates a plain total
    cfg.target = TargetKind::mean;
    const MCReport totals = run_mc(cfg);
    CHECK(totals.excluded_replicates == 0);
}

TEST_CASE("sweep: a single-point grid reproduces run_mc and bad cells stay local") {
    MCConfig base;
    base.example = 2;
    base.rho = 0.8;
    base.design = DesignKind::pips;
    base.f = 0.05;
    base.replicates = 150;
    base.seed = 21;
    base.target = TargetKind::mean;

    const std::vector<std::pair<std::string, MCConfig>> single{{"f=0.05", base}};
    const auto cells = run_sweep(single);
    REQUIRE(cells.size() == 1);
    REQUIRE(cells[0].report.has_value());
    const MCReport direct = run_mc(base);
    CHECK(cells[0].report->re_percent == direct.re_percent);
    CHECK(cells[0].report->rows[0].mse == direct.rows[0].mse);

    MCConfig bad = base;
    bad.f = 2.0;  // invalid sampling fraction
    const auto mixed = run_sweep({{"f=0.05", base}, {"f=2", bad}});
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].report.has_value());
    CHECK_FALSE(mixed[1].report.has_value());
    CHECK_FALSE(mixed[1].error.empty());

    CHECK_THROWS_AS(run_sweep({}), std::invalid_argument);
}

TEST_CASE("poisson HT bias shrinks at the Monte Carlo rate across seeds") {
    // |mean - truth| <= 5 sqrt(var/M) should hold for essentially every seed
    int within = 0;
    const int n_seeds = 40;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        MCConfig cfg;
        cfg.example = 2;
        cfg.rho = 0.8;
        cfg.design = DesignKind::poisson;
        cfg.f = 0.1;
        cfg.replicates = 400;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.target = TargetKind::mean;
        cfg.threshold = ThresholdMode::none;
        const MCReport rep = run_mc(cfg);
        const double bound =
            5.0 * std::sqrt(rep.rows[0].variance / static_cast<double>(rep.replicates));
        within += (rep.rows[0].bias <= bound);
    }
    CHECK(within >= n_seeds - 1);
}

TEST_CASE("improvement is positive across the rho grid under pips") {
    for (double rho : {0.0, 0.5, 0.9}) {
        MCConfig cfg;
        cfg.example = 2;
        cfg.rho = rho;
        cfg.design = DesignKind::pips;
        cfg.f = 0.05;
        cfg.replicates = 400;
        cfg.seed = 17;
        cfg.target = TargetKind::mean;
        const MCReport rep = run_mc(cfg);
        INFO("rho = " << rho);
        CHECK(rep.re_percent > 0.0);
        CHECK(rep.rows[1].mse < rep.rows[0].mse);
    }
}

TEST_CASE("config validation: conflicts and ranges") {
    MCConfig cfg;
    cfg.example = 2;
    cfg.design = DesignKind::pips;
    cfg.f = 0.05;
    cfg.n = 100;
    cfg.replicates = 100;
    cfg.seed = 1;
    CHECK_THROWS_AS(run_mc(cfg), std::invalid_argument);  // f and n conflict

    cfg.n.reset();
    cfg.replicates = 1;
    CHECK_THROWS_AS(run_mc(cfg), std::invalid_argument);  // M >= 2

    cfg.replicates = 100;
    cfg.threshold = ThresholdMode::manual;
    cfg.manual_a.reset();
    CHECK_THROWS_AS(run_mc(cfg), std::invalid_argument);  // manual needs a

    MCConfig ex1 = example1_config(1);
    ex1.f = 0.1;
    CHECK_THROWS_AS(run_mc(ex1), std::invalid_argument);  // example 1 fixes pi
}
