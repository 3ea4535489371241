// survht - design-based survey sampling toolkit command line.
//
// Subcommands: design, choose-k, estimate, simulate, sweep, oracle.
// JSON artifacts carry reports, CSV artifacts carry vectors; every JSON
// artifact embeds the fully resolved configuration that produced it.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "survht/survht.hpp"

namespace {

using nlohmann::ordered_json;
using namespace survht;

void write_json_file(const std::string& path, const ordered_json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ordered_json config_to_json(const MCConfig& cfg) {
    ordered_json j;
    j["example"] = cfg.example;
    if (cfg.example == 0) {
        j["pop_csv"] = cfg.csv_path;
        j["y_col"] = cfg.y_col;
        if (!cfg.z_col.empty()) j["z_col"] = cfg.z_col;
        if (!cfg.x_col.empty()) j["x_col"] = cfg.x_col;
    }
    if (cfg.example == 2 || cfg.example == 3) j["rho"] = cfg.rho;
    if (cfg.example == 4) {
        j["rho1"] = cfg.rho1;
        j["rho2"] = cfg.rho2;
    }
    if (cfg.example == 3) j["sigma2"] = cfg.sigma2;
    j["design"] = to_string(cfg.design);
    if (cfg.f) j["f"] = *cfg.f;
    if (cfg.n) j["n"] = *cfg.n;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["target"] = to_string(cfg.target);
    j["threshold"] = to_string(cfg.threshold);
    if (cfg.manual_a) j["manual_a"] = *cfg.manual_a;
    // the worker count schedules execution and never changes a digit,
    // so it is not part of the echoed configuration
    return j;
}

void config_from_json(const ordered_json& j, MCConfig& cfg) {
    if (j.contains("example")) cfg.example = j.at("example").get<int>();
    if (j.contains("pop_csv")) cfg.csv_path = j.at("pop_csv").get<std::string>();
    if (j.contains("y_col")) cfg.y_col = j.at("y_col").get<std::string>();
    if (j.contains("z_col")) cfg.z_col = j.at("z_col").get<std::string>();
    if (j.contains("x_col")) cfg.x_col = j.at("x_col").get<std::string>();
    if (j.contains("rho")) cfg.rho = j.at("rho").get<double>();
    if (j.contains("rho1")) cfg.rho1 = j.at("rho1").get<double>();
    if (j.contains("rho2")) cfg.rho2 = j.at("rho2").get<double>();
    if (j.contains("sigma2")) cfg.sigma2 = j.at("sigma2").get<double>();
    if (j.contains("design")) cfg.design = design_from_string(j.at("design").get<std::string>());
    if (j.contains("f")) cfg.f = j.at("f").get<double>();
    if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("target")) cfg.target = target_from_string(j.at("target").get<std::string>());
    if (j.contains("threshold"))
        cfg.threshold = threshold_mode_from_string(j.at("threshold").get<std::string>());
    if (j.contains("manual_a")) cfg.manual_a = j.at("manual_a").get<double>();
}

ordered_json report_to_json(const MCReport& report) {
    ordered_json j;
    j["config_echo"] = config_to_json(report.config);
    j["truth"] = report.truth;
    ordered_json rows = ordered_json::array();
    for (const MCRow& row : report.rows) {
        ordered_json r;
        r["estimator"] = row.estimator;
        r["bias"] = row.bias;
        r["bias_sq"] = row.bias_sq;
        r["variance"] = row.variance;
        r["mse"] = row.mse;
        r["mse_se"] = row.mse_se;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    j["re_percent"] = report.re_percent;
    j["replicates"] = report.replicates;
    j["excluded_replicates"] = report.excluded_replicates;
    j["K"] = report.k_used;
    j["a"] = report.a_used ? ordered_json(*report.a_used) : ordered_json(nullptr);
    j["u2_size"] = report.u2_size;
    if (!report.warnings.empty()) j["warnings"] = report.warnings;
    return j;
}

void print_report_summary(const MCReport& report) {
    std::cout << "truth = " << csv::format_double(report.truth) << "\n";
    for (const MCRow& row : report.rows) {
        std::cout << "  " << row.estimator << ": bias=" << row.bias << " var=" << row.variance
                  << " mse=" << row.mse << "\n";
    }
    std::cout << "Re = " << report.re_percent << "%  (K=" << report.k_used << ", a=";
    if (report.a_used)
        std::cout << *report.a_used;
    else
        std::cout << "none";
    std::cout << ", excluded=" << report.excluded_replicates << "/" << report.replicates << ")\n";
}

std::size_t resolve_workers(std::optional<std::size_t> flag) {
    if (flag) return std::max<std::size_t>(1, *flag);
    if (const char* env = std::getenv("SURVHT_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

struct PiCsv {
    std::vector<std::size_t> index;  ///< 0-based
    std::vector<double> pi;
    std::vector<double> pi_star;  ///< empty when the column is absent
};

PiCsv read_pi_csv(const std::string& path) {
    const csv::Table table = csv::read(path);
    const std::size_t pi_col = table.column("pi");
    const bool has_index = table.has_column("index");
    const bool has_star = table.has_column("pi_star");
    const std::size_t idx_col = has_index ? table.column("index") : 0;
    const std::size_t star_col = has_star ? table.column("pi_star") : 0;

    PiCsv out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (has_index) {
            const double raw = csv::parse_double(row[idx_col], r + 1, "index");
            if (raw < 1.0 || raw != std::floor(raw))
                throw std::invalid_argument("sample csv: index at row " + std::to_string(r + 1) +
                                            " must be a positive integer");
            out.index.push_back(static_cast<std::size_t>(raw) - 1);
        } else {
            out.index.push_back(r);
        }
        out.pi.push_back(csv::parse_double(row[pi_col], r + 1, "pi"));
        if (has_star) out.pi_star.push_back(csv::parse_double(row[star_col], r + 1, "pi_star"));
    }
    return out;
}

void write_pi_csv(const std::string& path, const std::vector<double>& pi,
                  const std::vector<double>* pi_star) {
    std::vector<std::string> header{"index", "pi"};
    if (pi_star) header.emplace_back("pi_star");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) {
        std::vector<std::string> row{std::to_string(k + 1), csv::format_double(pi[k])};
        if (pi_star) row.push_back(csv::format_double((*pi_star)[k]));
        rows.push_back(std::move(row));
    }
    csv::write(path, header, rows);
}

// ---------------------------------------------------------------- design --

struct DesignArgs {
    std::string design;
    std::size_t n = 0;
    std::string sizes_csv, sizes_col = "x";
    std::size_t n_pop = 0;
    std::string out;
};

int cmd_design(const DesignArgs& args) {
    const DesignKind kind = design_from_string(args.design);
    std::vector<double> sizes;
    std::size_t n_units = args.n_pop;
    if (!args.sizes_csv.empty()) {
        const csv::Table table = csv::read(args.sizes_csv);
        const std::size_t col = table.column(args.sizes_col);
        for (std::size_t r = 0; r < table.rows.size(); ++r)
            sizes.push_back(csv::parse_double(table.rows[r][col], r + 1, args.sizes_col));
        n_units = sizes.size();
    }
    if (n_units == 0)
        throw std::invalid_argument("design: provide --sizes <csv> or --n-pop <N>");

    InclusionProbs p;
    switch (kind) {
        case DesignKind::srswor:
            if (args.n > n_units) throw std::invalid_argument("design: n exceeds N");
            p.pi.assign(n_units, static_cast<double>(args.n) / static_cast<double>(n_units));
            p.target_n = static_cast<double>(args.n);
            break;
        case DesignKind::poisson:
        case DesignKind::pips:
            if (sizes.empty())
                throw std::invalid_argument("design: " + args.design + " needs --sizes");
            p = pi_from_sizes(sizes, args.n);
            break;
        case DesignKind::ppswr: {
            if (sizes.empty()) throw std::invalid_argument("design: ppswr needs --sizes");
            const double total = kahan_total(sizes);
            std::vector<double> pi(n_units);
            for (std::size_t k = 0; k < n_units; ++k)
                pi[k] = 1.0 - std::pow(1.0 - sizes[k] / total, static_cast<double>(args.n));
            p = InclusionProbs::from_pi(std::move(pi));
            break;
        }
    }
    write_pi_csv(args.out, p.pi, nullptr);

    ordered_json echo;
    echo["design"] = args.design;
    echo["n"] = args.n;
    echo["n_pop"] = n_units;
    if (!args.sizes_csv.empty()) {
        echo["sizes_csv"] = args.sizes_csv;
        echo["sizes_col"] = args.sizes_col;
    }
    echo["out"] = args.out;
    echo["sum_pi"] = p.target_n;
    std::cout << echo.dump(2) << "\n";
    return 0;
}

// -------------------------------------------------------------- choose-k --

struct ChooseKArgs {
    std::string pi_csv;
    std::string out;
    std::string out_pi_star;
};

int cmd_choose_k(const ChooseKArgs& args) {
    const PiCsv data = read_pi_csv(args.pi_csv);
    const InclusionProbs p = InclusionProbs::from_pi(data.pi);
    const ThresholdedProbs tp = choose_k(p);

    ordered_json j;
    ordered_json echo;
    echo["pi_csv"] = args.pi_csv;
    echo["n_pop"] = p.size();
    j["config_echo"] = std::move(echo);
    j["K"] = tp.k_chosen;
    j["a"] = tp.a ? ordered_json(*tp.a) : ordered_json(nullptr);
    j["n_modified"] = tp.modified_count();
    j["u2_size"] = tp.u2_size();
    std::cout << j.dump(2) << "\n";
    if (!args.out.empty()) write_json_file(args.out, j);
    if (!args.out_pi_star.empty()) write_pi_csv(args.out_pi_star, tp.pi, &tp.pi_star);
    return 0;
}

// -------------------------------------------------------------- estimate --

struct EstimateArgs {
    std::string pop_csv, y_col, z_col, x_col;
    std::string sample_csv;
    std::string design;
    std::string target = "total";
    std::optional<double> t_z;
    std::string out;
};

int cmd_estimate(const EstimateArgs& args) {
    const Population pop = load_csv(
        args.pop_csv, args.y_col,
        args.z_col.empty() ? std::nullopt : std::optional<std::string>(args.z_col),
        args.x_col.empty() ? std::nullopt : std::optional<std::string>(args.x_col));
    const std::size_t n_units = pop.size();
    const TargetKind target = target_from_string(args.target);
    const bool ratio_like = target == TargetKind::ratio || target == TargetKind::ratio_total;
    if (ratio_like && !pop.z)
        throw std::invalid_argument("estimate: ratio targets need --z-col");
    if (target == TargetKind::ratio_total && !args.t_z)
        throw std::invalid_argument("estimate: ratio_total needs the known z total via --tz");

    const PiCsv rows = read_pi_csv(args.sample_csv);
    Sample s;
    s.indices = rows.index;
    s.normalize(n_units);
    if (s.indices.size() != rows.index.size())
        throw std::invalid_argument("estimate: duplicate unit index in sample csv");

    std::vector<double> pi(n_units, 1.0), pi_star(n_units, 1.0);
    for (std::size_t r = 0; r < rows.index.size(); ++r) {
        const double v = rows.pi[r];
        if (!(v > 0.0 && v <= 1.0))
            throw std::invalid_argument("estimate: pi must lie in (0,1] (row " +
                                        std::to_string(r + 1) + ")");
        pi[rows.index[r]] = v;
        pi_star[rows.index[r]] = rows.pi_star.empty() ? v : rows.pi_star[r];
    }

    // Recover the threshold from the modified units; units left exactly at a
    // contribute nothing to the s2 terms, so this inference is lossless.
    std::optional<double> a;
    for (std::size_t r = 0; r < rows.index.size(); ++r) {
        if (rows.pi_star.empty()) break;
        if (rows.pi_star[r] != rows.pi[r]) {
            if (rows.pi_star[r] < rows.pi[r])
                throw std::invalid_argument("estimate: pi_star below pi at row " +
                                            std::to_string(r + 1));
            if (a && *a != rows.pi_star[r])
                throw std::invalid_argument("estimate: inconsistent threshold in pi_star column");
            a = rows.pi_star[r];
        }
    }

    ThresholdedProbs tp;
    tp.pi = pi;
    tp.pi_star = pi_star;
    tp.a = a;
    tp.in_u2.assign(n_units, 0);
    if (a) {
        for (std::size_t k : s.indices)
            if (pi[k] <= *a) tp.in_u2[k] = 1;
        std::size_t count = 0;
        for (char m : tp.in_u2) count += (m != 0);
        tp.k_chosen = count;
    }
    const bool has_star = !rows.pi_star.empty();

    std::optional<SecondOrderProvider> so;
    if (!args.design.empty()) {
        const DesignKind kind = design_from_string(args.design);
        if (kind == DesignKind::poisson) {
            so = SecondOrderProvider::poisson(pi);
        } else if (kind == DesignKind::srswor) {
            so = SecondOrderProvider::srswor(n_units, s.indices.size());
        } else {
            throw std::invalid_argument(
                "estimate: second-order probabilities unknown for this design");
        }
    }

    ordered_json j;
    ordered_json echo;
    echo["pop_csv"] = args.pop_csv;
    echo["y_col"] = args.y_col;
    if (!args.z_col.empty()) echo["z_col"] = args.z_col;
    echo["sample_csv"] = args.sample_csv;
    if (!args.design.empty()) echo["design"] = args.design;
    echo["target"] = args.target;
    if (args.t_z) echo["tz"] = *args.t_z;
    j["config_echo"] = std::move(echo);
    j["n_pop"] = n_units;
    j["sample_size"] = s.indices.size();
    j["a"] = a ? ordered_json(*a) : ordered_json(nullptr);

    const std::span<const double> y(pop.y);
    ordered_json out_rows = ordered_json::array();
    auto add_total_row = [&](const std::string& kind, double total,
                             const std::optional<double>& mse_hat) {
        ordered_json r;
        r["estimator"] = kind;
        r["total"] = total;
        r["mean"] = total / static_cast<double>(n_units);
        if (mse_hat) {
            r["mse_hat_total"] = *mse_hat;
            r["mse_hat_mean"] = *mse_hat / (static_cast<double>(n_units) * n_units);
        }
        out_rows.push_back(std::move(r));
    };

    if (target == TargetKind::total || target == TargetKind::mean) {
        InclusionProbs p;
        p.pi = pi;
        p.target_n = kahan_total(pi);
        std::optional<double> mse_ht, mse_iht;
        if (so) {
            const ThresholdedProbs plain = ThresholdedProbs::unmodified(pi);
            mse_ht = mse_hat_iht(s, y, plain, *so);
            if (has_star) mse_iht = mse_hat_iht(s, y, tp, *so);
        }
        add_total_row("ht", ht_total(s, y, p), mse_ht);
        if (has_star) add_total_row("iht", iht_total(s, y, tp), mse_iht);
    } else {
        const std::span<const double> z(*pop.z);
        InclusionProbs p;
        p.pi = pi;
        p.target_n = kahan_total(pi);
        if (target == TargetKind::ratio) {
            ordered_json r;
            r["estimator"] = "ratio";
            r["estimate"] = ratio_hat(s, y, z, p);
            out_rows.push_back(std::move(r));
            if (has_star) {
                ordered_json ri;
                ri["estimator"] = "ratio_iht";
                ri["estimate"] = ratio_iht_hat(s, y, z, tp);
                out_rows.push_back(std::move(ri));
            }
        } else {
            add_total_row("ratio_total", ratio_total(s, y, z, *args.t_z, p), std::nullopt);
            if (has_star)
                add_total_row("ratio_total_iht", ratio_total(s, y, z, *args.t_z, tp),
                              std::nullopt);
        }
        double z_min = (*pop.z)[0];
        for (double v : *pop.z) z_min = std::min(z_min, v);
        if (z_min <= 0.0)
            j["warnings"] = ordered_json::array(
                {"min z is not positive; the ratio-improvement guarantee assumes z bounded away "
                 "from zero"});
    }
    j["estimators"] = std::move(out_rows);

    std::cout << j.dump(2) << "\n";
    if (!args.out.empty()) write_json_file(args.out, j);
    return 0;
}

// -------------------------------------------------------------- simulate --

struct SimulateArgs {
    int example = -1;
    std::string pop_csv, y_col, z_col, x_col;
    std::optional<double> rho_opt, rho1_opt, rho2_opt, sigma2_opt;
    std::string design;
    std::optional<double> f;
    std::optional<std::size_t> n;
    std::size_t reps = 2000;
    std::optional<std::uint64_t> seed;
    std::string target;
    std::string threshold;
    std::optional<double> manual_a;
    std::optional<std::size_t> workers;
    std::string out;
};

MCConfig make_mc_config(const SimulateArgs& args) {
    if (!args.seed)
        throw std::invalid_argument("simulate: --seed is required (no wall-clock seeding)");
    MCConfig cfg;
    cfg.example = args.example < 0 ? (args.pop_csv.empty() ? 1 : 0) : args.example;
    cfg.csv_path = args.pop_csv;
    cfg.y_col = args.y_col;
    cfg.z_col = args.z_col;
    cfg.x_col = args.x_col;
    if (args.rho_opt) cfg.rho = *args.rho_opt;
    if (args.rho1_opt) cfg.rho1 = *args.rho1_opt;
    if (args.rho2_opt) cfg.rho2 = *args.rho2_opt;
    if (args.sigma2_opt) cfg.sigma2 = *args.sigma2_opt;
    if (cfg.example == 0 && cfg.csv_path.empty())
        throw std::invalid_argument("simulate: provide --example 1..4 or --pop-csv");
    cfg.design = args.design.empty()
                     ? (cfg.example == 1 ? DesignKind::poisson : DesignKind::pips)
                     : design_from_string(args.design);
    cfg.f = args.f;
    cfg.n = args.n;
    cfg.replicates = args.reps;
    cfg.seed = *args.seed;
    cfg.target = args.target.empty()
                     ? (cfg.example == 4 ? TargetKind::ratio : TargetKind::mean)
                     : target_from_string(args.target);
    if (args.threshold.empty())
        cfg.threshold = cfg.example == 1 ? ThresholdMode::manual : ThresholdMode::algorithm1;
    else
        cfg.threshold = threshold_mode_from_string(args.threshold);
    cfg.manual_a = args.manual_a;
    if (cfg.threshold == ThresholdMode::manual && !cfg.manual_a) {
        if (cfg.example == 1)
            cfg.manual_a = 0.08;  // the illustrative hand-set threshold
        else
            throw std::invalid_argument("simulate: manual threshold needs --manual-a");
    }
    cfg.workers = resolve_workers(args.workers);
    return cfg;
}

int cmd_simulate(const SimulateArgs& args) {
    const MCConfig cfg = make_mc_config(args);
    const MCReport report = run_mc(cfg);
    print_report_summary(report);
    if (!args.out.empty()) write_json_file(args.out, report_to_json(report));
    return 0;
}

// ----------------------------------------------------------------- sweep --

struct SweepArgs {
    std::string grid;
    std::optional<std::size_t> workers;
    std::string out;
    std::string csv_out;
};

int cmd_sweep(const SweepArgs& args) {
    std::ifstream in(args.grid);
    if (!in) throw std::runtime_error("cannot open grid file '" + args.grid + "'");
    ordered_json grid_doc;
    try {
        in >> grid_doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("sweep: malformed grid json: " + std::string(e.what()));
    }
    if (!grid_doc.contains("base") || !grid_doc.contains("vary"))
        throw std::invalid_argument("sweep: grid file needs 'base' and 'vary' objects");
    if (!grid_doc.at("base").contains("seed"))
        throw std::invalid_argument("sweep: base config must carry a seed (no wall-clock seeding)");

    MCConfig base;
    config_from_json(grid_doc.at("base"), base);
    base.workers = resolve_workers(args.workers);

    const ordered_json& vary = grid_doc.at("vary");
    if (vary.size() != 1)
        throw std::invalid_argument("sweep: 'vary' must contain exactly one parameter");
    const std::string param = vary.begin().key();
    const ordered_json& values = vary.begin().value();
    if (!values.is_array() || values.empty())
        throw std::invalid_argument("sweep: vary values must be a nonempty array");

    std::vector<std::pair<std::string, MCConfig>> grid;
    for (const auto& v : values) {
        MCConfig cfg = base;
        if (param == "f")
            cfg.f = v.get<double>();
        else if (param == "n")
            cfg.n = v.get<std::size_t>();
        else if (param == "sigma2")
            cfg.sigma2 = v.get<double>();
        else if (param == "rho")
            cfg.rho = v.get<double>();
        else if (param == "rho1")
            cfg.rho1 = v.get<double>();
        else if (param == "rho2")
            cfg.rho2 = v.get<double>();
        else if (param == "manual_a")
            cfg.manual_a = v.get<double>();
        else
            throw std::invalid_argument("sweep: cannot vary '" + param + "'");
        grid.emplace_back(param + "=" + v.dump(), cfg);
    }

    const std::vector<SweepCell> cells = run_sweep(grid);

    ordered_json j;
    j["grid_echo"] = grid_doc;
    ordered_json out_cells = ordered_json::array();
    for (const SweepCell& cell : cells) {
        ordered_json c;
        c["label"] = cell.label;
        if (cell.report)
            c["report"] = report_to_json(*cell.report);
        else
            c["error"] = cell.error;
        out_cells.push_back(std::move(c));
        std::cout << cell.label << ": ";
        if (cell.report)
            std::cout << "Re = " << cell.report->re_percent << "%\n";
        else
            std::cout << "error: " << cell.error << "\n";
    }
    j["cells"] = std::move(out_cells);
    if (!args.out.empty()) write_json_file(args.out, j);

    if (!args.csv_out.empty()) {
        std::vector<std::string> header{"param",    "value", "estimator", "bias",
                                        "bias_sq",  "variance", "mse",   "mse_se",
                                        "re_percent", "excluded"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i].report) continue;
            const MCReport& rep = *cells[i].report;
            for (const MCRow& row : rep.rows) {
                rows.push_back({param, values[i].dump(), row.estimator,
                                csv::format_double(row.bias), csv::format_double(row.bias_sq),
                                csv::format_double(row.variance), csv::format_double(row.mse),
                                csv::format_double(row.mse_se),
                                csv::format_double(rep.re_percent),
                                std::to_string(rep.excluded_replicates)});
            }
        }
        csv::write(args.csv_out, header, rows);
    }
    return 0;
}

// ---------------------------------------------------------------- oracle --

struct OracleArgs {
    std::string check;
    std::size_t n_pop = 8;
    std::optional<std::size_t> n;
    std::uint64_t seed = 7;
    std::string design = "srswor";
    std::string out;
};

double rel_dev(double got, double want, double scale) {
    const double denom = std::max({std::abs(got), std::abs(want), scale});
    return denom == 0.0 ? 0.0 : std::abs(got - want) / denom;
}

int cmd_oracle(const OracleArgs& args) {
    ordered_json j;
    ordered_json echo;
    echo["check"] = args.check;
    echo["n_pop"] = args.n_pop;
    echo["seed"] = args.seed;
    bool pass = false;
    double max_dev = 0.0;

    if (args.check == "poisson-exact") {
        auto [y, p] = make_random_instance(args.n_pop, args.seed);
        const ThresholdedProbs tp = choose_k(p);
        const SecondOrderProvider so = SecondOrderProvider::poisson(p.pi);
        const OutcomeTable table = enumerate_poisson(p, y, &tp);
        const double t_y = kahan_total(y);
        const double scale = std::abs(t_y);

        const ExactMoments fht = exact_moments_ht(y, p, so);
        const ExactMoments fiht = exact_moments_iht(y, tp, so);
        const ExactMoments eht = table.moments(table.ht, t_y, EstimatorKind::ht);
        const ExactMoments eiht = table.moments(table.iht, t_y, EstimatorKind::iht);

        max_dev = std::max({rel_dev(eht.bias, fht.bias, scale),
                            rel_dev(eht.variance, fht.variance, scale * scale),
                            rel_dev(eiht.bias, fiht.bias, scale),
                            rel_dev(eiht.variance, fiht.variance, scale * scale),
                            rel_dev(eiht.mse, fiht.mse, scale * scale)});
        j["mass_minus_1"] = table.mass() - 1.0;
        j["K"] = tp.k_chosen;
        pass = max_dev <= 1e-12 && std::abs(table.mass() - 1.0) <= 1e-12;
    } else if (args.check == "mse-unbiased") {
        auto [y, p] = make_random_instance(args.n_pop, args.seed);
        const ThresholdedProbs tp = choose_k(p);
        const SecondOrderProvider so = SecondOrderProvider::poisson(p.pi);
        const OutcomeTable table = enumerate_poisson(p, y, &tp);
        const double t_y = kahan_total(y);
        const ExactMoments fiht = exact_moments_iht(y, tp, so);
        const double expected = table.expectation(table.mse_hat);
        max_dev = rel_dev(expected, fiht.mse, std::abs(t_y) * std::abs(t_y));
        j["mse_exact"] = fiht.mse;
        j["mse_hat_expectation"] = expected;
        pass = max_dev <= 1e-10;
    } else if (args.check == "srswor-orders") {
        const std::size_t n = args.n ? *args.n : args.n_pop / 2;
        echo["n"] = n;
        InclusionProbs p;
        p.pi.assign(args.n_pop, static_cast<double>(n) / static_cast<double>(args.n_pop));
        p.target_n = static_cast<double>(n);
        const int up_to = args.n_pop >= 4 ? 4 : 3;
        const InclusionOrders orders = inclusion_orders(DesignKind::srswor, p, up_to);
        for (int order = 2; order <= up_to; ++order) {
            const double want = srswor_joint_prob(args.n_pop, n, order);
            double got = 0.0;
            if (order == 2) got = orders.pi2(0, 1);
            if (order == 3) got = orders.pi3(0, 1, 2);
            if (order == 4) got = orders.pi4(0, 1, 2, 3);
            max_dev = std::max(max_dev, rel_dev(got, want, 1.0));
        }
        const double third_enum = orders.pi3(0, 1, 2) - orders.pi2(0, 1) * orders.pi(2);
        max_dev = std::max(
            max_dev, rel_dev(third_enum, srswor_third_order_gap(args.n_pop, n), 1.0));
        j["third_order_gap"] = srswor_third_order_gap(args.n_pop, n);
        pass = max_dev <= 1e-13;
    } else if (args.check == "c4") {
        echo["design"] = args.design;
        const DesignKind kind = design_from_string(args.design);
        InclusionProbs p;
        if (kind == DesignKind::poisson) {
            p = make_random_instance(args.n_pop, args.seed).second;
        } else {
            const std::size_t n = args.n ? *args.n : args.n_pop / 2;
            echo["n"] = n;
            p.pi.assign(args.n_pop, static_cast<double>(n) / static_cast<double>(args.n_pop));
            p.target_n = static_cast<double>(n);
        }
        const ConditionC4Report report = check_condition_c4(kind, p);
        j["third_order_gap"] = report.third_order_gap;
        j["fourth_order_combination"] = report.fourth_order_combination;
        j["enum_second_max_abs_err"] = report.enum_second_max_abs_err;
        j["enum_third_max_abs_err"] = report.enum_third_max_abs_err;
        j["enum_fourth_max_abs_err"] = report.enum_fourth_max_abs_err;
        max_dev = std::max({report.enum_second_max_abs_err, report.enum_third_max_abs_err,
                            report.enum_fourth_max_abs_err});
        pass = report.pass;
    } else {
        throw std::invalid_argument(
            "oracle: unknown check '" + args.check +
            "' (expected poisson-exact|srswor-orders|mse-unbiased|c4)");
    }

    j["config_echo"] = std::move(echo);
    j["max_deviation"] = max_dev;
    j["pass"] = pass;
    std::cout << j.dump(2) << "\n";
    if (!args.out.empty()) write_json_file(args.out, j);
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"survht: Horvitz-Thompson / thresholded-HT survey sampling toolkit"};
    app.require_subcommand(1);

    DesignArgs design_args;
    auto* design = app.add_subcommand("design", "compute first-order inclusion probabilities");
    design->add_option("--design", design_args.design, "poisson|srswor|pips|ppswr")->required();
    design->add_option("--n", design_args.n, "sample size (expected size for poisson)")
        ->required();
    design->add_option("--sizes", design_args.sizes_csv, "csv with a size column");
    design->add_option("--col", design_args.sizes_col, "size column name (default x)");
    design->add_option("--n-pop", design_args.n_pop, "population size (uniform designs)");
    design->add_option("--out", design_args.out, "output pi csv")->required();

    ChooseKArgs choose_args;
    auto* choosek = app.add_subcommand("choose-k", "select the threshold K from pi");
    choosek->add_option("--pi", choose_args.pi_csv, "csv with a pi column")->required();
    choosek->add_option("--out", choose_args.out, "output json report");
    choosek->add_option("--out-pi-star", choose_args.out_pi_star, "output csv with pi_star");

    EstimateArgs est_args;
    auto* estimate = app.add_subcommand("estimate", "point estimates from a drawn sample");
    estimate->add_option("--pop", est_args.pop_csv, "population csv")->required();
    estimate->add_option("--y-col", est_args.y_col, "target column")->required();
    estimate->add_option("--z-col", est_args.z_col, "second characteristic column");
    estimate->add_option("--x-col", est_args.x_col, "size column");
    estimate->add_option("--sample", est_args.sample_csv, "sample csv: index,pi[,pi_star]")
        ->required();
    estimate->add_option("--design", est_args.design,
                         "poisson|srswor: enables the sample-based MSE estimator");
    estimate->add_option("--target", est_args.target, "total|mean|ratio|ratio_total");
    estimate->add_option("--tz", est_args.t_z, "known z total (ratio_total)");
    estimate->add_option("--out", est_args.out, "output json report");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "replicated sampling experiment");
    simulate->add_option("--example", sim_args.example, "population generator 1..4");
    simulate->add_option("--pop-csv", sim_args.pop_csv, "population csv instead of a generator");
    simulate->add_option("--y-col", sim_args.y_col, "target column (csv population)");
    simulate->add_option("--z-col", sim_args.z_col, "second characteristic column");
    simulate->add_option("--x-col", sim_args.x_col, "size column");
    simulate->add_option("--rho", sim_args.rho_opt, "example 2/3 correlation (default 0.8)");
    simulate->add_option("--rho1", sim_args.rho1_opt, "example 4 rho1 (default 0.7)");
    simulate->add_option("--rho2", sim_args.rho2_opt, "example 4 rho2 (default 0.8)");
    simulate->add_option("--sigma2", sim_args.sigma2_opt,
                         "example 3 size dispersion (default 25)");
    simulate->add_option("--design", sim_args.design, "poisson|srswor|pips|ppswr");
    simulate->add_option("--f", sim_args.f, "sampling fraction");
    simulate->add_option("--n", sim_args.n, "sample size");
    simulate->add_option("--reps", sim_args.reps, "replicate count M (default 2000)");
    simulate->add_option("--seed", sim_args.seed, "master seed (required)");
    simulate->add_option("--target", sim_args.target, "total|mean|ratio|ratio_total");
    simulate->add_option("--threshold", sim_args.threshold, "algorithm1|manual|none");
    simulate->add_option("--manual-a", sim_args.manual_a, "threshold value for manual mode");
    simulate->add_option("--workers", sim_args.workers, "parallel workers (or SURVHT_WORKERS)");
    simulate->add_option("--out", sim_args.out, "output json report");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run a grid of simulate configurations");
    sweep->add_option("--grid", sweep_args.grid, "grid spec json: {base:{...}, vary:{param:[..]}}")
        ->required();
    sweep->add_option("--workers", sweep_args.workers, "parallel workers (or SURVHT_WORKERS)");
    sweep->add_option("--out", sweep_args.out, "output json report");
    sweep->add_option("--csv", sweep_args.csv_out, "long-format csv for plotting");

    OracleArgs oracle_args;
    auto* oracle = app.add_subcommand("oracle", "exhaustive-enumeration verification checks");
    oracle
        ->add_option("--check", oracle_args.check,
                     "poisson-exact|srswor-orders|mse-unbiased|c4")
        ->required();
    oracle->add_option("--n-pop", oracle_args.n_pop, "population size (default 8)");
    oracle->add_option("--n", oracle_args.n, "sample size for srswor checks");
    oracle->add_option("--seed", oracle_args.seed, "instance seed (default 7)");
    oracle->add_option("--design", oracle_args.design, "design for the c4 check");
    oracle->add_option("--out", oracle_args.out, "output json report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (design->parsed()) return cmd_design(design_args);
        if (choosek->parsed()) return cmd_choose_k(choose_args);
        if (estimate->parsed()) return cmd_estimate(est_args);
        if (simulate->parsed()) return cmd_simulate(sim_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (oracle->parsed()) return cmd_oracle(oracle_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
