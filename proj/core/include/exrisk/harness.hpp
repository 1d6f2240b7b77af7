#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exrisk/assouad.hpp"
#include "exrisk/bounds.hpp"
#include "exrisk/train.hpp"

namespace exrisk {

enum class SigmaPolicy { all_ones, random };

struct ExperimentConfig {
    // distribution (sigma is generated per policy)
    int d = 2;
    int q = 4;
    std::size_t m = 16;
    double w = 0.003;
    double r = 1.0;
    double alpha = 1.0;
    SigmaPolicy sigma_policy = SigmaPolicy::all_ones;

    // n grid, geometric
    std::size_t n_min = 128;
    std::size_t n_max = 8192;
    double n_factor = 2.0;
    std::size_t seeds = 5;

    TrainConfig train;            // per-cell seed is derived from master_seed
    double clamp_bound = 8.0;     // M for the trained class
    double rate_constant = 4.0;   // W(n) = rate_constant * n^{2/3}
    std::size_t depth = 11;       // estimator hidden depth (>10 per the class assumption)
    std::size_t mc_eval = 200000; // evaluation sample size
    std::uint64_t master_seed = 1;
    std::size_t workers = 2;
    std::string output_dir = "sweep_out";

    std::vector<std::size_t> n_grid() const;
    AssouadParams distribution() const;  // sigma filled per policy
    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig parse_experiment_config_file(const std::string& path);
void write_experiment_config(std::ostream& out, const ExperimentConfig& cfg);

struct SweepRow {
    std::size_t n = 0;
    std::uint64_t seed = 0;  // seed index within the cell grid
    std::size_t param_count = 0;
    std::size_t depth = 0;
    double train_phi_risk = 0.0;
    double phi_risk = 0.0;
    double excess_phi_risk = 0.0;
    double zero_one_risk = 0.0;
    double excess_risk = 0.0;
    double se_excess = 0.0;

    bool failed() const;  // divergence rows carry NaN metrics
};

// Runs the (n, seed) grid with a bounded worker pool. Rows are committed to
// <output_dir>/results.csv in canonical (n, seed) order through a single
// appender, so interrupted runs leave a canonical prefix and identical
// configs reproduce byte-identical files. Cells already present on disk are
// not recomputed.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

std::vector<SweepRow> read_sweep_csv(const std::string& path);

struct MedianPoint {
    std::size_t n = 0;
    double median_excess = 0.0;
    double se = 0.0;  // MC standard error attached to the median row
    std::size_t count = 0;
};

// Per-n medians of exact excess risk over non-failed rows.
std::vector<MedianPoint> median_excess_by_n(const std::vector<SweepRow>& rows);

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double residual_se = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    double theoretical_exponent = 0.0;  // -(1+alpha)/(3(2+alpha))
    bool log_correction = false;
    std::size_t n_points = 0;
};

// OLS of log(median excess) (optionally minus ((1+a)/(2+a)) log log n)
// against log n; the 95% band uses the Student t quantile. Requires >= 4
// distinct n with >= 3 seeds each; throws FitError on nonpositive medians.
RateFit fit_rate(const std::vector<SweepRow>& rows, bool use_log_correction, double alpha);

struct VerdictRecord {
    bool pass = false;
    double slack = 0.1;
    RateFit fit;
    // measured median / lower-bound-curve value, per n
    std::vector<std::pair<std::size_t, double>> ratio_to_lower;
};

// Checks whether the fitted exponent band intersects
// [theoretical - slack, theoretical + slack] and reports the trajectory of
// measured medians against the lower rate curve. Curves must share the
// fit's alpha.
VerdictRecord compare_to_theory(const RateFit& fit, const std::vector<MedianPoint>& medians,
                                const RateCurve& lower, const RateCurve& upper,
                                double slack = 0.1);

// Two-sided 95% Student t quantile (normal limit beyond the table).
double student_t_975(std::size_t dof);

}  // namespace exrisk
