#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "survht/population.hpp"

using namespace survht;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("survht_poptest_" + name)).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// folded normal moments, the analytic oracle for |N(mu, sd^2)|
double folded_mean(double mu, double sd) {
    const double r = mu / sd;
    const double phi = std::exp(-0.5 * r * r) / std::sqrt(2.0 * M_PI);
    const double cdf_neg = 0.5 * std::erfc(r / std::sqrt(2.0));
    return mu * (1.0 - 2.0 * cdf_neg) + 2.0 * sd * phi;
}

double folded_sd(double mu, double sd) {
    const double m = folded_mean(mu, sd);
    return std::sqrt(mu * mu + sd * sd - m * m);
}

} // namespace

TEST_CASE("load_csv reads named columns back") {
    const std::string path = temp_path("basic.csv");
    write_file(path, "id,y,z\n1,1,10\n2,2,20\n3,3,30\n");

    const Population p = load_csv(path, "y");
    REQUIRE(p.size() == 3);
    CHECK(p.y == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_FALSE(p.z.has_value());
    CHECK_FALSE(p.x.has_value());

    const Population pz = load_csv(path, "y", std::string("z"));
    REQUIRE(pz.z.has_value());
    CHECK((*pz.z)[2] == 30.0);
}

TEST_CASE("load_csv reports precise errors") {
    const std::string path = temp_path("bad.csv");
    write_file(path, "y,x\n1,2\n2,oops\n");
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "y"), std::runtime_error);
    CHECK_THROWS_AS(load_csv(path, "w"), std::invalid_argument);
    CHECK_THROWS_WITH(load_csv(path, "y", std::nullopt, std::string("x")),
                      Catch::Matchers::ContainsSubstring("row 2"));

    const std::string neg = temp_path("neg.csv");
    write_file(neg, "y,x\n1,2\n2,-1\n");
    CHECK_THROWS_WITH(load_csv(neg, "y", std::nullopt, std::string("x")),
                      Catch::Matchers::ContainsSubstring("non-positive"));
}

TEST_CASE("a firm-sized skewed population loads at full size") {
    // 2300 lognormal incomes, the scale of the real-data workflow
    const std::string path = temp_path("firms.csv");
    std::string content = "income,employees\n";
    CounterRng rng(314);
    for (int i = 0; i < 2300; ++i) {
        const double income = std::exp(std::log(50.0) + rng.normal());
        const double employees = 1.0 + std::floor(income * rng.uniform(0.5, 1.5));
        content += csv::format_double(income) + "," + csv::format_double(employees) + "\n";
    }
    write_file(path, content);
    const Population p = load_csv(path, "employees", std::nullopt, std::string("income"));
    REQUIRE(p.size() == 2300);
    REQUIRE(p.x.has_value());
}

TEST_CASE("save_csv round-trips every double exactly") {
    Population p;
    CounterRng rng(5);
    for (int i = 0; i < 200; ++i) p.y.push_back(rng.normal() * std::pow(10.0, rng.uniform(-8, 8)));
    p.x.emplace();
    for (int i = 0; i < 200; ++i) p.x->push_back(std::abs(rng.normal()) + 1e-9);

    const std::string path = temp_path("roundtrip.csv");
    save_csv(p, path);
    const Population q = load_csv(path, "y", std::nullopt, std::string("x"));
    REQUIRE(q.size() == p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        CHECK(q.y[k] == p.y[k]);
        CHECK((*q.x)[k] == (*p.x)[k]);
    }
}

TEST_CASE("example population 1: half-normal values") {
    const Population p = gen_example1(2024);
    REQUIRE(p.size() == 3000);
    for (double v : p.y) REQUIRE(v >= 0.0);

    const Population q = gen_example1(2024);
    CHECK(q.y == p.y);
    CHECK(gen_example1(2025).y != p.y);

    // half-normal oracle: mean sqrt(2/pi), sd sqrt(1 - 2/pi)
    const double want_mean = std::sqrt(2.0 / M_PI);
    const double sd = std::sqrt(1.0 - 2.0 / M_PI);
    const double band = 4.0 * sd / std::sqrt(3000.0);
    CHECK_THAT(p.mean_y(), Catch::Matchers::WithinAbs(want_mean, band));
}

TEST_CASE("example population 2: correlation structure") {
    const Population exact = gen_example2(1.0, 7);
    REQUIRE(exact.x.has_value());
    for (std::size_t k = 0; k < exact.size(); ++k)
        REQUIRE(exact.y[k] == std::sqrt(3.0) * (*exact.x)[k]);

    const Population noise_only = gen_example2(0.0, 7);
    for (double v : noise_only.y) REQUIRE(v >= 0.0);

    CHECK_THROWS_AS(gen_example2(1.5, 7), std::invalid_argument);
    CHECK_THROWS_AS(gen_example2(-0.1, 7), std::invalid_argument);

    // analytic correlation oracle from U(0,2) and half-normal moments
    const double rho = 0.8;
    const Population p = gen_example2(rho, 99);
    const double var_y = rho * rho + 3.0 * (1.0 - rho * rho) * (1.0 - 2.0 / M_PI);
    const double want_corr = rho / std::sqrt(var_y);

    const std::size_t n = p.size();
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += (*p.x)[k];
        my += p.y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = (*p.x)[k] - mx;
        const double dy = p.y[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    CHECK_THAT(corr, Catch::Matchers::WithinAbs(want_corr, 0.05));
}

TEST_CASE("example 3 sizes: dispersion behavior") {
    const auto tight = gen_example3_sizes(1e-12, 3);
    REQUIRE(tight.size() == 3000);
    double lo = tight[0], hi = tight[0];
    for (double v : tight) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK((hi - lo) / 50.0 < 1e-6);

    auto cv = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        m /= v.size();
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / v.size()) / m;
    };
    const auto wide = gen_example3_sizes(25.0, 3);
    const auto narrow = gen_example3_sizes(5.0, 3);
    CHECK(cv(wide) > cv(narrow));
    for (double v : wide) REQUIRE(v > 0.0);

    // folded-normal oracle: |Normal(50, 25^2)| mean with a 4-sigma CLT band
    const double want = folded_mean(50.0, 25.0);
    const double band = 4.0 * folded_sd(50.0, 25.0) / std::sqrt(3000.0);
    double mean = 0;
    for (double v : wide) mean += v;
    mean /= wide.size();
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(want, band));

    CHECK_THROWS_AS(gen_example3_sizes(0.0, 3), std::invalid_argument);
}

TEST_CASE("example population 4: paired characteristics") {
    // shared noise stream makes y and z identical when rho1 = rho2
    std::vector<double> x{0.1, 0.5, 0.9}, e{0.3, -1.2, 0.7};
    const auto [y_same, z_same] = build_example4_values(x, e, e, 0.6, 0.6);
    CHECK(y_same == z_same);

    const auto [y0, z0] = build_example4_values(x, e, e, 0.0, 0.5);
    for (std::size_t k = 0; k < x.size(); ++k)
        CHECK(y0[k] == std::sqrt(3.0) * std::abs(e[k]));
    (void)z0;

    const Population p = gen_example4(0.7, 0.8, 11);
    REQUIRE(p.size() == 3000);
    REQUIRE(p.z.has_value());
    REQUIRE(p.x.has_value());
    for (std::size_t k = 0; k < p.size(); ++k) {
        REQUIRE(p.y[k] >= 0.0);  // both characteristics are sums of non-negative terms
        REQUIRE((*p.z)[k] >= 0.0);
    }
    const double ratio = p.ratio_yz();
    CHECK(std::isfinite(ratio));
    CHECK(ratio > 0.0);

    CHECK_THROWS_AS(gen_example4(1.2, 0.5, 1), std::invalid_argument);
}
