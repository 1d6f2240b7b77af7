#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "exrisk/harness.hpp"
#include "exrisk/rng.hpp"

using namespace exrisk;

namespace {

std::vector<SweepRow> synthetic_rows(const std::vector<std::size_t>& ns, std::size_t seeds,
                                     const std::function<double(std::size_t, std::size_t)>& excess) {
    std::vector<SweepRow> rows;
    for (std::size_t n : ns) {
        for (std::size_t s = 0; s < seeds; ++s) {
            SweepRow row;
            row.n = n;
            row.seed = s;
            row.excess_risk = excess(n, s);
            row.se_excess = 1e-4;
            rows.push_back(row);
        }
    }
    return rows;
}

ExperimentConfig tiny_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.d = 1;
    cfg.q = 2;
    cfg.m = 2;
    cfg.w = 0.12;
    cfg.r = 1.0;
    cfg.alpha = 1.0;
    cfg.sigma_policy = SigmaPolicy::all_ones;
    cfg.n_min = 32;
    cfg.n_max = 256;
    cfg.n_factor = 2.0;
    cfg.seeds = 3;
    cfg.train.max_epochs = 12;
    cfg.train.restarts = 1;
    cfg.train.batch_size = 16;
    cfg.train.seed = 0;
    cfg.rate_constant = 1.0;
    cfg.depth = 3;
    cfg.mc_eval = 2000;
    cfg.master_seed = 77;
    cfg.workers = 2;
    cfg.output_dir = out_dir;
    return cfg;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("experiment config round trip and validation") {
    ExperimentConfig cfg = tiny_config("cfg_dir");
    std::ostringstream out;
    write_experiment_config(out, cfg);
    std::istringstream in(out.str());
    const ExperimentConfig back = parse_experiment_config(in);
    CHECK(back.n_min == cfg.n_min);
    CHECK(back.n_max == cfg.n_max);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.w == cfg.w);
    CHECK(back.train.max_epochs == cfg.train.max_epochs);
    CHECK(back.output_dir == cfg.output_dir);

    ExperimentConfig bad = cfg;
    bad.seeds = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.w = 0.9;  // violates w < 1/m and admissibility
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    const auto grid = cfg.n_grid();
    CHECK(grid == std::vector<std::size_t>{32, 64, 128, 256});
}

TEST_CASE("fit recovers exact power laws") {
    const std::vector<std::size_t> ns{128, 256, 512, 1024, 2048};
    const auto rows = synthetic_rows(ns, 3, [](std::size_t n, std::size_t) {
        return std::pow(static_cast<double>(n), -1.0 / 3.0);
    });
    const RateFit fit = fit_rate(rows, false, 1.0);
    CHECK(std::abs(fit.exponent - (-1.0 / 3.0)) < 1e-9);
    CHECK(fit.band_lo <= fit.exponent);
    CHECK(fit.band_hi >= fit.exponent);
    CHECK(fit.theoretical_exponent == doctest::Approx(-2.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("log correction removes the planted log factor") {
    const std::vector<std::size_t> ns{128, 256, 512, 1024, 2048, 4096};
    const double alpha = 1.0;
    const auto rows = synthetic_rows(ns, 3, [](std::size_t n, std::size_t) {
        const double nn = static_cast<double>(n);
        return std::pow(nn, -2.0 / 9.0) * std::pow(std::log(nn), 2.0 / 3.0);
    });
    const RateFit fit = fit_rate(rows, true, alpha);
    CHECK(std::abs(fit.exponent - (-2.0 / 9.0)) < 1e-6);
}

TEST_CASE("noisy fits keep the planted slope in the band") {
    const std::vector<std::size_t> ns{128, 256, 512, 1024, 2048, 4096, 8192};
    Rng rng(2025);
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto rows = synthetic_rows(ns, 5, [&](std::size_t n, std::size_t) {
            const double noise = 1.0 + 0.1 * (2.0 * rng.uniform01() - 1.0);
            return std::pow(static_cast<double>(n), -1.0 / 3.0) * noise;
        });
        const RateFit fit = fit_rate(rows, false, 1.0);
        CHECK(fit.band_hi > fit.band_lo);
        if (fit.band_lo <= -1.0 / 3.0 && -1.0 / 3.0 <= fit.band_hi) {
            ++covered;
        }
    }
    CHECK(covered >= 90);
}

TEST_CASE("fit errors") {
    const std::vector<std::size_t> ns{128, 256, 512, 1024};
    auto rows = synthetic_rows(ns, 3, [](std::size_t n, std::size_t) {
        return std::pow(static_cast<double>(n), -0.25);
    });
    rows[0].excess_risk = 0.0;
    rows[1].excess_risk = 0.0;
    rows[2].excess_risk = 0.0;  // median at n=128 becomes zero
    CHECK_THROWS_AS(fit_rate(rows, false, 1.0), FitError);

    const auto few = synthetic_rows({128, 256, 512}, 3, [](std::size_t, std::size_t) {
        return 0.5;
    });
    CHECK_THROWS_AS(fit_rate(few, false, 1.0), FitError);

    auto thin = synthetic_rows(ns, 3, [](std::size_t, std::size_t) { return 0.5; });
    thin.pop_back();  // one n keeps only 2 seeds
    CHECK_THROWS_AS(fit_rate(thin, false, 1.0), FitError);
}

TEST_CASE("medians are robust to failed rows") {
    std::vector<SweepRow> rows = synthetic_rows({64, 128}, 5, [](std::size_t n, std::size_t s) {
        return 0.01 * static_cast<double>(s + 1) * (n == 64 ? 2.0 : 1.0);
    });
    rows[2].excess_risk = std::numeric_limits<double>::quiet_NaN();  // failed cell
    const auto medians = median_excess_by_n(rows);
    REQUIRE(medians.size() == 2);
    CHECK(medians[0].n == 64);
    CHECK(medians[0].count == 4);
    // surviving 64-row values: 0.02, 0.04, 0.08, 0.10 -> median 0.06
    CHECK(medians[0].median_excess == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(medians[1].median_excess == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("verdicts") {
    RateFit fit;
    fit.exponent = -0.22;
    fit.band_lo = -0.26;
    fit.band_hi = -0.18;
    fit.theoretical_exponent = rate_exponent(1.0);
    std::vector<MedianPoint> medians{{128, 0.05, 1e-4, 5}, {256, 0.04, 1e-4, 5}};
    const RateCurve lower{1.0, 1.0, RateKind::lower};
    const RateCurve upper{1.0, 1.0, RateKind::upper};

    const VerdictRecord pass = compare_to_theory(fit, medians, lower, upper, 0.1);
    CHECK(pass.pass);
    REQUIRE(pass.ratio_to_lower.size() == 2);
    CHECK(pass.ratio_to_lower[0].second ==
          doctest::Approx(0.05 / rate_lower(128, 1.0)).epsilon(1e-12));

    RateFit off = fit;
    off.exponent = -0.5;
    off.band_lo = -0.55;
    off.band_hi = -0.45;
    off.theoretical_exponent = rate_exponent(1.0);
    CHECK(!compare_to_theory(off, medians, lower, upper, 0.1).pass);

    const RateCurve wrong_alpha{0.0, 1.0, RateKind::lower};
    CHECK_THROWS_AS(compare_to_theory(fit, medians, wrong_alpha, upper, 0.1),
                    std::invalid_argument);
}

TEST_CASE("sweep end to end: cardinality, determinism, resume") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "exrisk_harness_test";
    fs::remove_all(base);

    ExperimentConfig cfg = tiny_config((base / "run1").string());
    const auto rows = run_sweep(cfg);
    CHECK(rows.size() == 12);  // 4 n-values x 3 seeds

    // byte-identical rerun into a fresh directory
    ExperimentConfig cfg2 = tiny_config((base / "run2").string());
    run_sweep(cfg2);
    const std::string bytes1 = file_bytes((base / "run1" / "results.csv").string());
    const std::string bytes2 = file_bytes((base / "run2" / "results.csv").string());
    CHECK(bytes1 == bytes2);
    CHECK(!bytes1.empty());

    // idempotent rerun on the same directory: no recomputation, same bytes
    const auto again = run_sweep(cfg);
    CHECK(again.size() == 12);
    CHECK(file_bytes((base / "run1" / "results.csv").string()) == bytes1);

    // resume from an interrupted prefix, including a torn final line
    ExperimentConfig cfg3 = tiny_config((base / "run3").string());
    fs::create_directories(base / "run3");
    {
        std::istringstream full(bytes1);
        std::ofstream partial(base / "run3" / "results.csv");
        std::string line;
        for (int i = 0; i < 6 && std::getline(full, line); ++i) {
            partial << line << "\n";  // header + 5 rows
        }
        partial << "128,2,40,3,0.61";  // torn write, no newline
    }
    run_sweep(cfg3);
    CHECK(file_bytes((base / "run3" / "results.csv").string()) == bytes1);

    // single-worker run matches the 2-worker bytes
    ExperimentConfig cfg4 = tiny_config((base / "run4").string());
    cfg4.workers = 1;
    run_sweep(cfg4);
    CHECK(file_bytes((base / "run4" / "results.csv").string()) == bytes1);

    // read back and sanity-check the table
    const auto parsed = read_sweep_csv((base / "run1" / "results.csv").string());
    CHECK(parsed.size() == 12);
    for (const auto& row : parsed) {
        CHECK(row.depth == 3);
        CHECK(row.param_count > 0);
        if (!row.failed()) {
            CHECK(row.excess_risk >= 0.0);
            CHECK(row.zero_one_risk >= row.excess_risk - 1e-12);
        }
    }
    fs::remove_all(base);
}

TEST_CASE("diverging cells become failed rows and the sweep continues") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "exrisk_failed_rows_test";
    fs::remove_all(dir);
    ExperimentConfig cfg = tiny_config(dir.string());
    cfg.n_min = 32;
    cfg.n_max = 64;
    cfg.clamp_bound = std::numeric_limits<double>::infinity();
    cfg.rate_constant = 30.0;         // wide enough that some unit is live
    cfg.train.learning_rate = 1e160;  // overflow within a few epochs
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 6);
    for (const auto& row : rows) {
        CHECK(row.failed());
    }
    // failed rows survive the CSV round trip and medians skip them
    const auto parsed = read_sweep_csv((dir / "results.csv").string());
    REQUIRE(parsed.size() == 6);
    for (const auto& row : parsed) {
        CHECK(row.failed());
    }
    CHECK(median_excess_by_n(parsed).empty());
    CHECK_THROWS_AS(fit_rate(parsed, false, 1.0), FitError);
    fs::remove_all(dir);
}

TEST_CASE("median excess is nonincreasing in n over 20 seeds") {
    // property-level monotonicity on the cheap d=1 family
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "exrisk_monotone_test";
    fs::remove_all(dir);
    ExperimentConfig cfg = tiny_config(dir.string());
    cfg.n_min = 64;
    cfg.n_max = 512;
    cfg.seeds = 20;
    cfg.train.max_epochs = 25;
    cfg.mc_eval = 20000;
    const auto rows = run_sweep(cfg);
    const auto medians = median_excess_by_n(rows);
    REQUIRE(medians.size() == 4);
    for (std::size_t i = 1; i < medians.size(); ++i) {
        CHECK(medians[i].median_excess <= medians[i - 1].median_excess + 1e-12);
    }
    fs::remove_all(dir);
}

TEST_CASE("ratio trajectory is monotone for honest synthetic curves") {
    // rows that follow the upper curve exactly: measured / lower = (log n)^{2/3}
    const std::vector<std::size_t> ns{128, 256, 512, 1024, 2048};
    const auto rows = synthetic_rows(ns, 3, [](std::size_t n, std::size_t) {
        return rate_upper(n, 1.0);
    });
    const RateFit fit = fit_rate(rows, true, 1.0);
    const auto medians = median_excess_by_n(rows);
    const RateCurve lower{1.0, 1.0, RateKind::lower};
    const RateCurve upper{1.0, 1.0, RateKind::upper};
    const VerdictRecord verdict = compare_to_theory(fit, medians, lower, upper, 0.1);
    CHECK(verdict.pass);
    for (std::size_t i = 1; i < verdict.ratio_to_lower.size(); ++i) {
        CHECK(verdict.ratio_to_lower[i].second > verdict.ratio_to_lower[i - 1].second);
        const double want = std::pow(std::log(static_cast<double>(ns[i])), 2.0 / 3.0);
        CHECK(verdict.ratio_to_lower[i].second == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("student t quantiles") {
    CHECK(student_t_975(2) == doctest::Approx(4.303));
    CHECK(student_t_975(5) == doctest::Approx(2.571));
    CHECK(student_t_975(40) == doctest::Approx(1.96));
    CHECK_THROWS_AS(student_t_975(0), std::invalid_argument);
}

}  // TEST_SUITE
