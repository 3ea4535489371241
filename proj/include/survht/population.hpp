#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "survht/csv.hpp"
#include "survht/kahan.hpp"
#include "survht/rng.hpp"

namespace survht {

/// Finite population: target values y, optional second characteristic z,
/// optional strictly positive size variable x. Immutable after construction.
struct Population {
    std::vector<double> y;
    std::optional<std::vector<double>> z;
    std::optional<std::vector<double>> x;

    [[nodiscard]] std::size_t size() const { return y.size(); }

    [[nodiscard]] double total_y() const { return kahan_total(y); }
    [[nodiscard]] double total_z() const {
        if (!z) throw std::invalid_argument("population: no z variable");
        return kahan_total(*z);
    }
    [[nodiscard]] double mean_y() const { return total_y() / static_cast<double>(size()); }
    [[nodiscard]] double ratio_yz() const { return total_y() / total_z(); }

    void validate() const {
        if (y.empty()) throw std::invalid_argument("population: N must be at least 1");
        if (z && z->size() != y.size())
            throw std::invalid_argument("population: z length differs from y");
        if (x) {
            if (x->size() != y.size())
                throw std::invalid_argument("population: x length differs from y");
            for (std::size_t k = 0; k < x->size(); ++k)
                if (!((*x)[k] > 0.0))
                    throw std::invalid_argument("population: non-positive size value at unit " +
                                                std::to_string(k + 1));
        }
    }
};

/// Reads a population from CSV, binding columns by name.
inline Population load_csv(const std::string& path, const std::string& y_col,
                           const std::optional<std::string>& z_col = std::nullopt,
                           const std::optional<std::string>& x_col = std::nullopt) {
    const csv::Table table = csv::read(path);
    const std::size_t yi = table.column(y_col);
    const std::size_t zi = z_col ? table.column(*z_col) : 0;
    const std::size_t xi = x_col ? table.column(*x_col) : 0;

    Population pop;
    pop.y.reserve(table.rows.size());
    if (z_col) pop.z.emplace();
    if (x_col) pop.x.emplace();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        pop.y.push_back(csv::parse_double(row[yi], r + 1, y_col));
        if (z_col) pop.z->push_back(csv::parse_double(row[zi], r + 1, *z_col));
        if (x_col) {
            const double v = csv::parse_double(row[xi], r + 1, *x_col);
            if (!(v > 0.0))
                throw std::invalid_argument("population: non-positive value in column '" + *x_col +
                                            "' at row " + std::to_string(r + 1));
            pop.x->push_back(v);
        }
    }
    pop.validate();
    return pop;
}

/// Writes a population as CSV with 17-significant-digit numbers, so that
/// load_csv(save_csv(p)) reproduces every double exactly.
inline void save_csv(const Population& pop, const std::string& path,
                     const std::string& y_col = "y", const std::string& z_col = "z",
                     const std::string& x_col = "x") {
    std::vector<std::string> header{y_col};
    if (pop.z) header.push_back(z_col);
    if (pop.x) header.push_back(x_col);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(pop.size());
    for (std::size_t k = 0; k < pop.size(); ++k) {
        std::vector<std::string> row{csv::format_double(pop.y[k])};
        if (pop.z) row.push_back(csv::format_double((*pop.z)[k]));
        if (pop.x) row.push_back(csv::format_double((*pop.x)[k]));
        rows.push_back(std::move(row));
    }
    csv::write(path, header, rows);
}

inline constexpr std::size_t kExamplePopulationSize = 3000;

/// Example population 1: y_k = |N(0,1)| at N = 3000.
inline Population gen_example1(std::uint64_t seed, std::size_t n_units = kExamplePopulationSize) {
    CounterRng rng(seed);
    Population pop;
    pop.y.reserve(n_units);
    for (std::size_t k = 0; k < n_units; ++k) pop.y.push_back(std::abs(rng.normal()));
    pop.validate();
    return pop;
}

/// Core of example population 2: y_k = sqrt(3)*rho*x_k + sqrt(3-3 rho^2)*|e_k|.
inline std::vector<double> build_example2_values(std::span<const double> x,
                                                 std::span<const double> noise, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("gen_example2: rho must lie in [0,1]");
    const double signal = std::sqrt(3.0) * rho;
    const double spread = std::sqrt(3.0 - 3.0 * rho * rho);
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = signal * x[k] + spread * std::abs(noise[k]);
    return y;
}

/// Example population 2: x_k ~ U(0,2) stored as the size variable.
inline Population gen_example2(double rho, std::uint64_t seed,
                               std::size_t n_units = kExamplePopulationSize) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("gen_example2: rho must lie in [0,1]");
    CounterRng rng(seed);
    std::vector<double> x(n_units), noise(n_units);
    for (std::size_t k = 0; k < n_units; ++k) {
        x[k] = rng.uniform(0.0, 2.0);
        noise[k] = rng.normal();
    }
    Population pop;
    pop.y = build_example2_values(x, noise, rho);
    pop.x = std::move(x);
    pop.validate();
    return pop;
}

/// Example 3 size variable: c_i = |Normal(50, sigma2)|, strictly positive.
/// The dispersion parameter is applied as the normal's standard deviation;
/// that is the scale at which the reported size-heterogeneity sweeps
/// (sigma2 = 5 .. 25) actually produce near-zero sizes.
inline std::vector<double> gen_example3_sizes(double sigma2, std::uint64_t seed,
                                              std::size_t n_units = kExamplePopulationSize) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("gen_example3_sizes: sigma2 must be positive");
    CounterRng rng(seed);
    const double sd = sigma2;
    std::vector<double> sizes(n_units);
    for (std::size_t k = 0; k < n_units; ++k) {
        double c = std::abs(50.0 + sd * rng.normal());
        while (c == 0.0) c = std::abs(50.0 + sd * rng.normal());
        sizes[k] = c;
    }
    return sizes;
}

/// Core of example population 4; exposed so callers can share noise streams.
inline std::pair<std::vector<double>, std::vector<double>>
build_example4_values(std::span<const double> x, std::span<const double> noise1,
                      std::span<const double> noise2, double rho1, double rho2) {
    if (!(rho1 >= 0.0 && rho1 <= 1.0) || !(rho2 >= 0.0 && rho2 <= 1.0))
        throw std::invalid_argument("gen_example4: rho1 and rho2 must lie in [0,1]");
    const double sig1 = std::sqrt(12.0) * rho1;
    const double sig2 = std::sqrt(12.0) * rho2;
    const double spr1 = std::sqrt(3.0 - 3.0 * rho1 * rho1);
    const double spr2 = std::sqrt(3.0 - 3.0 * rho2 * rho2);
    std::vector<double> y(x.size()), z(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = sig1 * x[k] + spr1 * std::abs(noise1[k]);
        z[k] = sig2 * x[k] + spr2 * std::abs(noise2[k]);
    }
    return {std::move(y), std::move(z)};
}

/// Example population 4: paired (y, z) with shared x_k ~ U(0,1).
inline Population gen_example4(double rho1, double rho2, std::uint64_t seed,
                               std::size_t n_units = kExamplePopulationSize) {
    if (!(rho1 >= 0.0 && rho1 <= 1.0) || !(rho2 >= 0.0 && rho2 <= 1.0))
        throw std::invalid_argument("gen_example4: rho1 and rho2 must lie in [0,1]");
    CounterRng rng(seed);
    std::vector<double> x(n_units), e1(n_units), e2(n_units);
    for (std::size_t k = 0; k < n_units; ++k) {
        x[k] = rng.uniform(0.0, 1.0);
        e1[k] = rng.normal();
        e2[k] = rng.normal();
    }
    auto [y, z] = build_example4_values(x, e1, e2, rho1, rho2);
    Population pop;
    pop.y = std::move(y);
    pop.z = std::move(z);
    pop.x = std::move(x);
    pop.validate();
    return pop;
}

} // namespace survht
