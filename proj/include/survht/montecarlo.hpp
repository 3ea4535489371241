#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "survht/designs.hpp"
#include "survht/estimators.hpp"
#include "survht/exact.hpp"
#include "survht/kahan.hpp"
#include "survht/population.hpp"
#include "survht/threshold.hpp"

namespace survht {

enum class TargetKind { total, mean, ratio, ratio_total };
enum class ThresholdMode { algorithm1, manual, none };

inline std::string to_string(TargetKind t) {
    switch (t) {
        case TargetKind::total: return "total";
        case TargetKind::mean: return "mean";
        case TargetKind::ratio: return "ratio";
        case TargetKind::ratio_total: return "ratio_total";
    }
    throw std::invalid_argument("unknown target kind");
}

inline TargetKind target_from_string(const std::string& s) {
    if (s == "total") return TargetKind::total;
    if (s == "mean") return TargetKind::mean;
    if (s == "ratio") return TargetKind::ratio;
    if (s == "ratio_total") return TargetKind::ratio_total;
    throw std::invalid_argument("unknown target '" + s + "' (expected total|mean|ratio|ratio_total)");
}

inline std::string to_string(ThresholdMode m) {
    switch (m) {
        case ThresholdMode::algorithm1: return "algorithm1";
        case ThresholdMode::manual: return "manual";
        case ThresholdMode::none: return "none";
    }
    throw std::invalid_argument("unknown threshold mode");
}

inline ThresholdMode threshold_mode_from_string(const std::string& s) {
    if (s == "algorithm1") return ThresholdMode::algorithm1;
    if (s == "manual") return ThresholdMode::manual;
    if (s == "none") return ThresholdMode::none;
    throw std::invalid_argument("unknown threshold mode '" + s +
                                "' (expected algorithm1|manual|none)");
}

/// Declarative replication experiment. Everything that affects the numbers
/// lives here; the worker count only schedules the work.
struct MCConfig {
    // population source: example generator (1..4) or a CSV file (example = 0)
    int example = 0;
    double rho = 0.8;      ///< example 2 (and the example-3 population)
    double rho1 = 0.7;     ///< example 4
    double rho2 = 0.8;     ///< example 4
    double sigma2 = 25.0;  ///< example 3 size heterogeneity
    std::string csv_path, y_col, z_col, x_col;

    DesignKind design = DesignKind::poisson;
    std::optional<double> f;        ///< sampling fraction; exclusive with n
    std::optional<std::size_t> n;   ///< sample size; exclusive with f

    std::size_t replicates = 2000;
    std::uint64_t seed = 0;
    TargetKind target = TargetKind::mean;

    ThresholdMode threshold = ThresholdMode::algorithm1;
    std::optional<double> manual_a;

    std::size_t workers = 1;
};

/// One estimator's empirical summary over the valid replicates.
struct MCRow {
    std::string estimator;
    double bias = 0.0;      ///< |mean estimate - truth|
    double bias_sq = 0.0;   ///< (mean estimate - truth)^2
    double variance = 0.0;  ///< central second moment, M-denominator
    double mse = 0.0;       ///< mean of (estimate - truth)^2
    double mse_se = 0.0;    ///< Monte Carlo standard error of the mse column
};

struct MCReport {
    MCConfig config;
    double truth = 0.0;
    std::vector<MCRow> rows;  ///< [classical, improved]
    double re_percent = 0.0;
    std::size_t replicates = 0;
    std::size_t excluded_replicates = 0;
    std::size_t k_used = 0;
    std::optional<double> a_used;
    std::size_t u2_size = 0;
    std::vector<std::string> warnings;
};

namespace detail {

// Seed-stream tags. The population and size streams depend only on the
// master seed, so sweeps that vary design parameters reuse the same
// population; replicate r always sees the same stream regardless of workers.
inline constexpr std::uint64_t kPopulationStream = 1;
inline constexpr std::uint64_t kSizesStream = 2;
inline constexpr std::uint64_t kReplicateStream = 3;

struct ResolvedExperiment {
    Population population;
    std::vector<double> sizes;  ///< drives pips/ppswr/poisson draws
    InclusionProbs pi;
    ThresholdedProbs tp;
    double truth = 0.0;
    std::size_t sample_n = 0;  ///< integer design size (meaningless for example-1 poisson)
};

inline InclusionProbs example1_probabilities() {
    std::vector<double> pi;
    pi.reserve(3000);
    for (int i = 0; i < 1000; ++i) pi.push_back(0.2);
    for (int i = 0; i < 1000; ++i) pi.push_back(0.001);
    for (int i = 0; i < 1000; ++i) pi.push_back(0.08);
    return InclusionProbs::from_pi(std::move(pi));
}

inline ResolvedExperiment resolve_experiment(const MCConfig& cfg) {
    if (cfg.replicates < 2)
        throw std::invalid_argument("monte carlo: at least 2 replicates required");
    if (cfg.f && cfg.n)
        throw std::invalid_argument("monte carlo: sampling fraction and sample size conflict");
    if (cfg.f && !(*cfg.f > 0.0 && *cfg.f <= 1.0))
        throw std::invalid_argument("monte carlo: sampling fraction must lie in (0,1]");
    if (cfg.threshold == ThresholdMode::manual && !cfg.manual_a)
        throw std::invalid_argument("monte carlo: manual threshold requires a value");

    ResolvedExperiment ex;
    const std::uint64_t pop_seed = CounterRng(cfg.seed).derive(kPopulationStream).next_u64();
    const std::uint64_t sizes_seed = CounterRng(cfg.seed).derive(kSizesStream).next_u64();

    switch (cfg.example) {
        case 1: ex.population = gen_example1(pop_seed); break;
        case 2: ex.population = gen_example2(cfg.rho, pop_seed); break;
        case 3: ex.population = gen_example2(cfg.rho, pop_seed); break;
        case 4: ex.population = gen_example4(cfg.rho1, cfg.rho2, pop_seed); break;
        case 0:
            ex.population = load_csv(cfg.csv_path, cfg.y_col,
                                     cfg.z_col.empty() ? std::nullopt
                                                       : std::optional<std::string>(cfg.z_col),
                                     cfg.x_col.empty() ? std::nullopt
                                                       : std::optional<std::string>(cfg.x_col));
            break;
        default: throw std::invalid_argument("monte carlo: example must be one of 0..4");
    }
    const std::size_t n_units = ex.population.size();

    if (cfg.example == 1) {
        if (cfg.f || cfg.n)
            throw std::invalid_argument(
                "monte carlo: example 1 fixes its probability configuration; drop f/n");
        if (cfg.design != DesignKind::poisson)
            throw std::invalid_argument("monte carlo: example 1 uses poisson sampling");
        ex.pi = example1_probabilities();
        ex.sample_n = static_cast<std::size_t>(std::llround(ex.pi.target_n));
    } else {
        if (!cfg.f && !cfg.n)
            throw std::invalid_argument("monte carlo: provide a sampling fraction or sample size");
        ex.sample_n = cfg.n ? *cfg.n
                            : static_cast<std::size_t>(
                                  std::llround(*cfg.f * static_cast<double>(n_units)));
        if (ex.sample_n == 0 || ex.sample_n > n_units)
            throw std::invalid_argument("monte carlo: sample size out of range");

        if (cfg.example == 3) {
            ex.sizes = gen_example3_sizes(cfg.sigma2, sizes_seed, n_units);
        } else if (ex.population.x) {
            ex.sizes = *ex.population.x;
        }

        switch (cfg.design) {
            case DesignKind::srswor:
                ex.pi.pi.assign(n_units, static_cast<double>(ex.sample_n) /
                                             static_cast<double>(n_units));
                ex.pi.target_n = static_cast<double>(ex.sample_n);
                break;
            case DesignKind::poisson:
            case DesignKind::pips:
                if (ex.sizes.empty())
                    throw std::invalid_argument(
                        "monte carlo: design needs a size variable (x column or example sizes)");
                ex.pi = pi_from_sizes(ex.sizes, ex.sample_n);
                break;
            case DesignKind::ppswr: {
                if (ex.sizes.empty())
                    throw std::invalid_argument(
                        "monte carlo: design needs a size variable (x column or example sizes)");
                const double total = kahan_total(ex.sizes);
                std::vector<double> pi(n_units);
                for (std::size_t k = 0; k < n_units; ++k)
                    pi[k] = 1.0 - std::pow(1.0 - ex.sizes[k] / total,
                                           static_cast<double>(ex.sample_n));
                ex.pi = InclusionProbs::from_pi(std::move(pi));
                break;
            }
        }
    }

    switch (cfg.threshold) {
        case ThresholdMode::algorithm1: ex.tp = choose_k(ex.pi); break;
        case ThresholdMode::manual: ex.tp = apply_threshold(ex.pi, *cfg.manual_a); break;
        case ThresholdMode::none: ex.tp = ThresholdedProbs::unmodified(ex.pi.pi); break;
    }

    switch (cfg.target) {
        case TargetKind::total: ex.truth = ex.population.total_y(); break;
        case TargetKind::mean: ex.truth = ex.population.mean_y(); break;
        case TargetKind::ratio: ex.truth = ex.population.ratio_yz(); break;
        case TargetKind::ratio_total: ex.truth = ex.population.total_y(); break;
    }
    return ex;
}

} // namespace detail

/// Runs the replication experiment. Deterministic for a given config: the
/// per-replicate streams are derived from (seed, replicate index) and results
/// are reduced in replicate order, so the worker count never changes a digit.
inline MCReport run_mc(const MCConfig& cfg) {
    const detail::ResolvedExperiment ex = detail::resolve_experiment(cfg);
    const std::size_t n_units = ex.population.size();
    const std::size_t n_reps = cfg.replicates;
    const bool ratio_like =
        cfg.target == TargetKind::ratio || cfg.target == TargetKind::ratio_total;
    if (ratio_like && !ex.population.z)
        throw std::invalid_argument("monte carlo: ratio targets need a z variable");

    const std::span<const double> y(ex.population.y);
    const std::span<const double> z =
        ex.population.z ? std::span<const double>(*ex.population.z) : std::span<const double>{};
    const double t_z = ratio_like && cfg.target == TargetKind::ratio_total
                           ? ex.population.total_z()
                           : 0.0;
    const double scale = cfg.target == TargetKind::mean ? 1.0 / static_cast<double>(n_units) : 1.0;

    std::vector<double> classical(n_reps, 0.0);
    std::vector<double> improved(n_reps, 0.0);
    std::vector<char> valid(n_reps, 1);

    const CounterRng master(cfg.seed);
    auto run_chunk = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            CounterRng rng = master.derive(detail::kReplicateStream, r);
            Sample s;
            switch (cfg.design) {
                case DesignKind::poisson: s = draw_poisson(ex.pi, rng); break;
                case DesignKind::srswor: s = draw_srswor(n_units, ex.sample_n, rng); break;
                case DesignKind::pips: s = draw_pips_systematic(ex.pi, rng); break;
                case DesignKind::ppswr: {
                    const PpsDraw d = draw_pps_wr(ex.sizes, ex.sample_n, rng);
                    s = d.distinct;
                    break;
                }
            }
            try {
                switch (cfg.target) {
                    case TargetKind::total:
                    case TargetKind::mean:
                        classical[r] = scale * ht_total(s, y, ex.pi);
                        improved[r] = scale * iht_total(s, y, ex.tp);
                        break;
                    case TargetKind::ratio:
                        classical[r] = ratio_hat(s, y, z, ex.pi);
                        improved[r] = ratio_iht_hat(s, y, z, ex.tp);
                        break;
                    case TargetKind::ratio_total:
                        classical[r] = ratio_total(s, y, z, t_z, ex.pi);
                        improved[r] = ratio_total(s, y, z, t_z, ex.tp);
                        break;
                }
            } catch (const undefined_ratio_error&) {
                valid[r] = 0;
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(cfg.workers, n_reps));
    if (n_workers == 1) {
        run_chunk(0, n_reps);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_workers);
        const std::size_t chunk = (n_reps + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n_reps, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_chunk(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::size_t excluded = 0;
    for (char v : valid) excluded += (v == 0);
    if (excluded * 100 > n_reps)
        throw std::runtime_error("monte carlo: more than 1% of replicates were invalid (" +
                                 std::to_string(excluded) + " of " + std::to_string(n_reps) + ")");
    const std::size_t n_valid = n_reps - excluded;

    auto summarize = [&](const std::vector<double>& estimates, const std::string& name) {
        KahanSum mean_acc;
        for (std::size_t r = 0; r < n_reps; ++r)
            if (valid[r]) mean_acc.add(estimates[r]);
        const double mean = mean_acc.value() / static_cast<double>(n_valid);
        KahanSum var_acc, mse_acc, mse2_acc;
        for (std::size_t r = 0; r < n_reps; ++r) {
            if (!valid[r]) continue;
            const double dm = estimates[r] - mean;
            const double dt = estimates[r] - ex.truth;
            var_acc.add(dm * dm);
            mse_acc.add(dt * dt);
            mse2_acc.add(dt * dt * dt * dt);
        }
        MCRow row;
        row.estimator = name;
        const auto m = static_cast<double>(n_valid);
        row.bias = std::abs(mean - ex.truth);
        row.bias_sq = (mean - ex.truth) * (mean - ex.truth);
        row.variance = var_acc.value() / m;
        row.mse = mse_acc.value() / m;
        const double mse_var = std::max(0.0, mse2_acc.value() / m - row.mse * row.mse);
        row.mse_se = std::sqrt(mse_var / m);
        return row;
    };

    std::string classical_name, improved_name;
    switch (cfg.target) {
        case TargetKind::total:
        case TargetKind::mean:
            classical_name = "ht";
            improved_name = "iht";
            break;
        case TargetKind::ratio:
            classical_name = "ratio";
            improved_name = "ratio_iht";
            break;
        case TargetKind::ratio_total:
            classical_name = "ratio_total";
            improved_name = "ratio_total_iht";
            break;
    }

    MCReport report;
    report.config = cfg;
    report.truth = ex.truth;
    report.replicates = n_reps;
    report.excluded_replicates = excluded;
    report.k_used = ex.tp.k_chosen;
    report.a_used = ex.tp.a;
    report.u2_size = ex.tp.u2_size();
    report.rows.push_back(summarize(classical, classical_name));
    report.rows.push_back(summarize(improved, improved_name));
    const double mse_classical = report.rows[0].mse;
    const double mse_improved = report.rows[1].mse;
    report.re_percent =
        mse_classical == 0.0 ? 0.0 : std::abs(mse_classical - mse_improved) / mse_classical * 100.0;
    if (ratio_like) {
        double z_min = (*ex.population.z)[0];
        for (double v : *ex.population.z) z_min = std::min(z_min, v);
        if (z_min <= 0.0)
            report.warnings.push_back(
                "min z is not positive; the ratio-improvement guarantee assumes z bounded away "
                "from zero");
    }
    return report;
}

/// One sweep cell: either a report or the error that cell produced.
struct SweepCell {
    std::string label;
    std::optional<MCReport> report;
    std::string error;
};

/// Runs a grid of configurations; a failing cell is recorded, not fatal.
inline std::vector<SweepCell> run_sweep(const std::vector<std::pair<std::string, MCConfig>>& grid) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    std::vector<SweepCell> cells;
    cells.reserve(grid.size());
    for (const auto& [label, cfg] : grid) {
        SweepCell cell;
        cell.label = label;
        try {
            cell.report = run_mc(cfg);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

} // namespace survht
