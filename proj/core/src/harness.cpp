#include "exrisk/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "exrisk/builders.hpp"
#include "exrisk/csv.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

std::vector<std::size_t> ExperimentConfig::n_grid() const {
    std::vector<std::size_t> grid;
    double n = static_cast<double>(n_min);
    while (n <= static_cast<double>(n_max) + 0.5) {
        const std::size_t v = static_cast<std::size_t>(std::llround(n));
        if (!grid.empty() && v <= grid.back()) {
            throw std::invalid_argument("ExperimentConfig: n grid must be strictly increasing");
        }
        grid.push_back(v);
        n *= n_factor;
    }
    return grid;
}

AssouadParams ExperimentConfig::distribution() const {
    AssouadParams params;
    params.d = d;
    params.q = q;
    params.m = m;
    params.w = w;
    params.r = r;
    params.alpha = alpha;
    params.residual_region = AssouadParams::default_residual_region(d);
    if (sigma_policy == SigmaPolicy::all_ones) {
        params.sigma.assign(m, 1);
    } else {
        Rng rng(derive_seed(master_seed, 0x7369676dULL));
        params.sigma.resize(m);
        for (auto& bit : params.sigma) {
            bit = rng.bernoulli(0.5) ? 1 : 0;
        }
    }
    return params;
}

void ExperimentConfig::validate() const {
    if (seeds < 3) {
        throw std::invalid_argument("ExperimentConfig: need at least 3 seeds per n");
    }
    if (n_factor <= 1.0 || n_min < 1 || n_max < n_min) {
        throw std::invalid_argument("ExperimentConfig: bad n grid");
    }
    if (depth < 3) {
        throw std::invalid_argument("ExperimentConfig: estimator depth must be >= 3");
    }
    if (workers < 1 || mc_eval < 1 || !(rate_constant > 0.0)) {
        throw std::invalid_argument("ExperimentConfig: bad run parameters");
    }
    train.validate();
    AssouadParams params = distribution();
    params.validate();
    if (!params.margin_admissible()) {
        throw std::invalid_argument(
            "ExperimentConfig: margin admissibility m*w <= (q^-r/2)^alpha fails");
    }
}

namespace {

std::map<std::string, std::string> read_kv(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("experiment config: expected key = value, got '" +
                                        std::string(view) + "'");
        }
        kv[std::string(trim(view.substr(0, eq)))] = std::string(trim(view.substr(eq + 1)));
    }
    return kv;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
    auto kv = read_kv(in);
    ExperimentConfig cfg;
    auto get = [&](const char* key, auto parse, auto& field) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            field = parse(it->second);
        }
    };
    auto as_int = [](const std::string& s) { return parse_int(s); };
    auto as_double = [](const std::string& s) { return parse_double(s); };

    get("d", as_int, cfg.d);
    get("q", as_int, cfg.q);
    get("m", as_int, cfg.m);
    get("w", as_double, cfg.w);
    get("r", as_double, cfg.r);
    get("alpha", as_double, cfg.alpha);
    if (auto it = kv.find("sigma_policy"); it != kv.end()) {
        if (it->second == "all_ones") {
            cfg.sigma_policy = SigmaPolicy::all_ones;
        } else if (it->second == "random") {
            cfg.sigma_policy = SigmaPolicy::random;
        } else {
            throw std::invalid_argument("experiment config: sigma_policy must be all_ones|random");
        }
    }
    get("n_min", as_int, cfg.n_min);
    get("n_max", as_int, cfg.n_max);
    get("n_factor", as_double, cfg.n_factor);
    get("seeds", as_int, cfg.seeds);
    get("learning_rate", as_double, cfg.train.learning_rate);
    get("lr_decay", as_double, cfg.train.lr_decay);
    get("batch_size", as_int, cfg.train.batch_size);
    get("max_epochs", as_int, cfg.train.max_epochs);
    get("plateau_tol", as_double, cfg.train.plateau_tol);
    get("plateau_epochs", as_int, cfg.train.plateau_epochs);
    get("restarts", as_int, cfg.train.restarts);
    get("clamp_bound", as_double, cfg.clamp_bound);
    get("rate_constant", as_double, cfg.rate_constant);
    get("depth", as_int, cfg.depth);
    get("mc_eval", as_int, cfg.mc_eval);
    get("master_seed", as_int, cfg.master_seed);
    get("workers", as_int, cfg.workers);
    if (auto it = kv.find("output_dir"); it != kv.end()) {
        cfg.output_dir = it->second;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_experiment_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open experiment config: " + path);
    }
    return parse_experiment_config(in);
}

void write_experiment_config(std::ostream& out, const ExperimentConfig& cfg) {
    out << "d = " << cfg.d << "\n";
    out << "q = " << cfg.q << "\n";
    out << "m = " << cfg.m << "\n";
    out << "w = " << format_double(cfg.w) << "\n";
    out << "r = " << format_double(cfg.r) << "\n";
    out << "alpha = " << format_double(cfg.alpha) << "\n";
    out << "sigma_policy = "
        << (cfg.sigma_policy == SigmaPolicy::all_ones ? "all_ones" : "random") << "\n";
    out << "n_min = " << cfg.n_min << "\n";
    out << "n_max = " << cfg.n_max << "\n";
    out << "n_factor = " << format_double(cfg.n_factor) << "\n";
    out << "seeds = " << cfg.seeds << "\n";
    out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
    out << "lr_decay = " << format_double(cfg.train.lr_decay) << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "max_epochs = " << cfg.train.max_epochs << "\n";
    out << "plateau_tol = " << format_double(cfg.train.plateau_tol) << "\n";
    out << "plateau_epochs = " << cfg.train.plateau_epochs << "\n";
    out << "restarts = " << cfg.train.restarts << "\n";
    out << "clamp_bound = " << format_double(cfg.clamp_bound) << "\n";
    out << "rate_constant = " << format_double(cfg.rate_constant) << "\n";
    out << "depth = " << cfg.depth << "\n";
    out << "mc_eval = " << cfg.mc_eval << "\n";
    out << "master_seed = " << cfg.master_seed << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "output_dir = " << cfg.output_dir << "\n";
}

bool SweepRow::failed() const {
    return !std::isfinite(excess_risk);
}

namespace {

SweepRow parse_sweep_row(const std::string& line) {
    const auto fields = split(line, ',');
    if (fields.size() != 10) {
        throw std::runtime_error("results csv: bad row '" + line + "'");
    }
    SweepRow row;
    row.n = static_cast<std::size_t>(parse_int(fields[0]));
    row.seed = static_cast<std::uint64_t>(parse_int(fields[1]));
    row.param_count = static_cast<std::size_t>(parse_int(fields[2]));
    row.depth = static_cast<std::size_t>(parse_int(fields[3]));
    row.train_phi_risk = parse_double(fields[4]);
    row.phi_risk = parse_double(fields[5]);
    row.excess_phi_risk = parse_double(fields[6]);
    row.zero_one_risk = parse_double(fields[7]);
    row.excess_risk = parse_double(fields[8]);
    row.se_excess = parse_double(fields[9]);
    return row;
}

}  // namespace

namespace {

// Reads rows; with tolerate_tail, a malformed final line (interrupted write)
// is dropped and reported through had_partial_tail.
std::vector<SweepRow> read_rows(const std::string& path, bool tolerate_tail,
                                bool* had_partial_tail) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open results csv: " + path);
    }
    std::vector<SweepRow> rows;
    std::string line;
    bool first = true;
    bool partial = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        if (first) {
            first = false;
            continue;  // header
        }
        try {
            rows.push_back(parse_sweep_row(line));
        } catch (const std::exception&) {
            if (tolerate_tail && in.peek() == std::char_traits<char>::eof()) {
                partial = true;
                break;
            }
            throw;
        }
    }
    if (had_partial_tail != nullptr) {
        *had_partial_tail = partial;
    }
    return rows;
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    return read_rows(path, /*tolerate_tail=*/false, nullptr);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const AssouadParams params = cfg.distribution();
    const std::vector<std::size_t> grid = cfg.n_grid();

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const std::string results_path = (fs::path(cfg.output_dir) / "results.csv").string();

    // Cells already on disk are kept as-is; a malformed final row (an
    // interrupted write) is dropped and the file rewritten to the valid
    // prefix before appending.
    std::set<std::pair<std::size_t, std::uint64_t>> done;
    std::vector<SweepRow> existing;
    if (fs::exists(results_path)) {
        bool partial_tail = false;
        existing = read_rows(results_path, /*tolerate_tail=*/true, &partial_tail);
        if (partial_tail) {
            std::ofstream rewrite(results_path, std::ios::trunc);
            rewrite << kRiskReportCsvHeader << "\n";
            for (const auto& row : existing) {
                rewrite << risk_report_csv_row(
                               row.n, row.seed, row.param_count, row.depth,
                               row.train_phi_risk,
                               RiskReport{row.zero_one_risk, row.phi_risk, row.excess_risk,
                                          row.excess_phi_risk, 0, 0, row.se_excess, 0, 0})
                        << "\n";
            }
        }
        for (const auto& row : existing) {
            done.insert({row.n, row.seed});
        }
    } else {
        std::ofstream out(results_path);
        out << kRiskReportCsvHeader << "\n";
    }

    struct Cell {
        std::size_t n;
        std::uint64_t seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t n : grid) {
        for (std::uint64_t s = 0; s < cfg.seeds; ++s) {
            if (!done.count({n, s})) {
                cells.push_back({n, s});
            }
        }
    }

    std::vector<std::optional<std::pair<std::string, SweepRow>>> slots(cells.size());
    std::atomic<std::size_t> next_task{0};
    std::mutex commit_mutex;
    std::size_t next_commit = 0;
    std::ofstream out(results_path, std::ios::app);
    std::vector<SweepRow> fresh(cells.size());

    auto run_cell = [&](const Cell& cell) -> std::pair<std::string, SweepRow> {
        const std::uint64_t data_seed = derive_seed(cfg.master_seed, cell.n, cell.seed_idx);
        const auto data = sample(params, cell.n, data_seed);
        NetworkSpec arch = sized_architecture(cell.n, cfg.rate_constant, cfg.depth,
                                              static_cast<std::size_t>(cfg.d), cfg.clamp_bound);
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = derive_seed(cfg.master_seed, cell.n * 1000003ULL + cell.seed_idx,
                                     0x747261696eULL);

        SweepRow row;
        row.n = cell.n;
        row.seed = cell.seed_idx;
        row.param_count = arch.parameter_count();
        row.depth = cfg.depth;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        try {
            TrainResult trained = train_erm(arch, data, train_cfg);
            const std::uint64_t eval_seed =
                derive_seed(cfg.master_seed, cell.n * 1000003ULL + cell.seed_idx, 0x6576616cULL);
            const RiskReport report =
                exact_excess_risk(params, trained.net, cfg.mc_eval, eval_seed);
            row.train_phi_risk = trained.final_phi_risk;
            row.phi_risk = report.phi_risk;
            row.excess_phi_risk = report.excess_phi_risk;
            row.zero_one_risk = report.zero_one_risk;
            row.excess_risk = report.excess_risk;
            row.se_excess = report.se_excess;
        } catch (const TrainingError&) {
            row.train_phi_risk = nan;
            row.phi_risk = nan;
            row.excess_phi_risk = nan;
            row.zero_one_risk = nan;
            row.excess_risk = nan;
            row.se_excess = nan;
        }
        const std::string line = risk_report_csv_row(
            row.n, row.seed, row.param_count, row.depth, row.train_phi_risk,
            RiskReport{row.zero_one_risk, row.phi_risk, row.excess_risk, row.excess_phi_risk,
                       0, 0, row.se_excess, 0, cfg.mc_eval});
        return {line, row};
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next_task.fetch_add(1);
            if (i >= cells.size()) {
                return;
            }
            auto result = run_cell(cells[i]);
            std::lock_guard<std::mutex> lock(commit_mutex);
            slots[i] = std::move(result);
            while (next_commit < slots.size() && slots[next_commit].has_value()) {
                out << slots[next_commit]->first << "\n";
                out.flush();
                fresh[next_commit] = slots[next_commit]->second;
                ++next_commit;
            }
        }
    };

    const std::size_t n_workers = std::min(cfg.workers, std::max<std::size_t>(1, cells.size()));
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }

    std::vector<SweepRow> all = std::move(existing);
    all.insert(all.end(), fresh.begin(), fresh.end());
    return all;
}

std::vector<MedianPoint> median_excess_by_n(const std::vector<SweepRow>& rows) {
    std::map<std::size_t, std::vector<const SweepRow*>> by_n;
    for (const auto& row : rows) {
        if (!row.failed()) {
            by_n[row.n].push_back(&row);
        }
    }
    std::vector<MedianPoint> out;
    for (auto& [n, group] : by_n) {
        std::sort(group.begin(), group.end(), [](const SweepRow* a, const SweepRow* b) {
            return a->excess_risk < b->excess_risk;
        });
        MedianPoint pt;
        pt.n = n;
        pt.count = group.size();
        const std::size_t mid = group.size() / 2;
        if (group.size() % 2 == 1) {
            pt.median_excess = group[mid]->excess_risk;
            pt.se = group[mid]->se_excess;
        } else {
            pt.median_excess = 0.5 * (group[mid - 1]->excess_risk + group[mid]->excess_risk);
            pt.se = 0.5 * std::hypot(group[mid - 1]->se_excess, group[mid]->se_excess);
        }
        out.push_back(pt);
    }
    return out;
}

double student_t_975(std::size_t dof) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                   2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                   2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                   2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof == 0) {
        throw std::invalid_argument("student_t_975: zero degrees of freedom");
    }
    if (dof <= 30) {
        return table[dof - 1];
    }
    return 1.96;
}

RateFit fit_rate(const std::vector<SweepRow>& rows, bool use_log_correction, double alpha) {
    const auto medians = median_excess_by_n(rows);
    if (medians.size() < 4) {
        throw FitError("fit_rate: need at least 4 distinct n values");
    }
    for (const auto& pt : medians) {
        if (pt.count < 3) {
            throw FitError("fit_rate: need at least 3 seeds per n");
        }
        if (!(pt.median_excess > 0.0)) {
            throw FitError("fit_rate: nonpositive median excess risk at n = " +
                           std::to_string(pt.n));
        }
    }

    const double correction_power = (1.0 + alpha) / (2.0 + alpha);
    std::vector<double> xs, ys;
    for (const auto& pt : medians) {
        const double x = std::log(static_cast<double>(pt.n));
        double y = std::log(pt.median_excess);
        if (use_log_correction) {
            y -= correction_power * std::log(x);
        }
        xs.push_back(x);
        ys.push_back(y);
    }

    const std::size_t k = xs.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(k);
    mean_y /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    const double slope = sxy / sxx;
    const double intercept = mean_y - slope * mean_x;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double resid = ys[i] - (intercept + slope * xs[i]);
        rss += resid * resid;
    }
    const double sigma2 = rss / static_cast<double>(k - 2);
    const double se_slope = std::sqrt(sigma2 / sxx);
    const double quantile = student_t_975(k - 2);

    RateFit fit;
    fit.exponent = slope;
    fit.intercept = intercept;
    fit.residual_se = std::sqrt(sigma2);
    fit.band_lo = slope - quantile * se_slope;
    fit.band_hi = slope + quantile * se_slope;
    fit.theoretical_exponent = rate_exponent(alpha);
    fit.log_correction = use_log_correction;
    fit.n_points = k;
    return fit;
}

VerdictRecord compare_to_theory(const RateFit& fit, const std::vector<MedianPoint>& medians,
                                const RateCurve& lower, const RateCurve& upper, double slack) {
    if (lower.alpha != upper.alpha || std::abs(rate_exponent(lower.alpha) -
                                               fit.theoretical_exponent) > 1e-12) {
        throw std::invalid_argument("compare_to_theory: curves must share the fit's alpha");
    }
    VerdictRecord verdict;
    verdict.slack = slack;
    verdict.fit = fit;
    const double lo = fit.theoretical_exponent - slack;
    const double hi = fit.theoretical_exponent + slack;
    verdict.pass = fit.band_hi >= lo && fit.band_lo <= hi;
    for (const auto& pt : medians) {
        verdict.ratio_to_lower.push_back({pt.n, pt.median_excess / lower(pt.n)});
    }
    return verdict;
}

}  // namespace exrisk
