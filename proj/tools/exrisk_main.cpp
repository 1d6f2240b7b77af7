// Command-line front end: seeded training sweeps, rate fitting, theory
// curves, the calibration table, and distribution self-checks.
//
// Exit codes: 0 on success/pass, 2 when a verdict or property check fails,
// 1 on errors.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exrisk/assouad.hpp"
#include "exrisk/bounds.hpp"
#include "exrisk/bump.hpp"
#include "exrisk/harness.hpp"
#include "exrisk/logistic.hpp"
#include "exrisk/rng.hpp"

using nlohmann::json;

namespace {

int run_sweep_cmd(const std::string& config_path) {
    const exrisk::ExperimentConfig cfg = exrisk::parse_experiment_config_file(config_path);
    const auto rows = exrisk::run_sweep(cfg);
    std::size_t failed = 0;
    for (const auto& row : rows) {
        failed += row.failed();
    }
    std::cout << "sweep complete: " << rows.size() << " rows ("
              << failed << " failed) -> " << cfg.output_dir << "/results.csv\n";
    return 0;
}

int run_fit_cmd(const std::string& input, double alpha, bool log_correction, double slack) {
    const auto rows = exrisk::read_sweep_csv(input);
    const exrisk::RateFit fit = exrisk::fit_rate(rows, log_correction, alpha);
    const auto medians = exrisk::median_excess_by_n(rows);
    const exrisk::RateCurve lower{alpha, 1.0, exrisk::RateKind::lower};
    const exrisk::RateCurve upper{alpha, 1.0, exrisk::RateKind::upper};
    const exrisk::VerdictRecord verdict =
        exrisk::compare_to_theory(fit, medians, lower, upper, slack);

    json out;
    out["exponent"] = fit.exponent;
    out["band"] = {fit.band_lo, fit.band_hi};
    out["intercept"] = fit.intercept;
    out["residual_se"] = fit.residual_se;
    out["theoretical_exponent"] = fit.theoretical_exponent;
    out["log_correction"] = fit.log_correction;
    out["n_points"] = fit.n_points;
    out["slack"] = verdict.slack;
    out["pass"] = verdict.pass;
    json ratios = json::array();
    for (const auto& [n, ratio] : verdict.ratio_to_lower) {
        ratios.push_back({{"n", n}, {"ratio_to_lower", ratio}});
    }
    out["ratio_trajectory"] = ratios;
    std::cout << out.dump(2) << "\n";
    return verdict.pass ? 0 : 2;
}

int run_curves_cmd(double alpha, std::size_t n_min, std::size_t n_max, double factor,
                   const std::string& output) {
    std::vector<exrisk::RateCurve> curves{
        {alpha, 1.0, exrisk::RateKind::upper},
        {alpha, 1.0, exrisk::RateKind::lower},
        {alpha, 1.0, exrisk::RateKind::phi_upper},
    };
    if (output.empty()) {
        exrisk::write_rate_curves_csv(std::cout, curves, n_min, n_max, factor);
    } else {
        std::ofstream out(output);
        if (!out) {
            throw std::runtime_error("cannot open " + output);
        }
        exrisk::write_rate_curves_csv(out, curves, n_min, n_max, factor);
    }
    return 0;
}

int run_calib_table_cmd(const std::string& output, std::size_t eta_points,
                        std::size_t theta_points) {
    const exrisk::CalibrationTable table(eta_points, theta_points);
    if (output.empty()) {
        table.write_csv(std::cout);
    } else {
        std::ofstream out(output);
        if (!out) {
            throw std::runtime_error("cannot open " + output);
        }
        table.write_csv(out);
    }
    return 0;
}

// Distribution property suite: closed forms against Monte Carlo and
// quadrature on the configured family.
int run_dist_check_cmd(const std::string& config_path, std::uint64_t seed) {
    const exrisk::AssouadParams params =
        exrisk::parse_distribution_config_file(config_path);

    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) {
            std::cout << "  (" << detail << ")";
        }
        std::cout << "\n";
    };

    report("params_valid_and_margin_admissible", params.margin_admissible(),
           "m*w <= (q^-r/2)^alpha");

    {
        const std::size_t n = 1000000;
        const auto samples = exrisk::sample(params, n, seed);
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& s : samples) {
            const double v = std::min(s.eta_at_x, 1.0 - s.eta_at_x);
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / static_cast<double>(n);
        const double se = std::sqrt(
            std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean) /
            static_cast<double>(n));
        const double closed = exrisk::bayes_risk(params);
        std::ostringstream detail;
        detail << "closed " << closed << " vs MC " << mean << " +- " << se;
        report("bayes_risk_mc", std::abs(mean - closed) <= 3.0 * se, detail.str());
    }

    {
        const std::size_t n = 100000;
        const auto samples = exrisk::sample(params, n, seed + 1);
        const double amp = params.bump_amplitude();
        bool ok = true;
        for (int k = 0; k < 50 && ok; ++k) {
            const double t = amp * (static_cast<double>(k) + 0.321) / 49.0;
            std::size_t count = 0;
            for (const auto& s : samples) {
                const double margin = std::abs(s.eta_at_x - 0.5);
                if (margin > 0.0 && margin <= t) {
                    ++count;
                }
            }
            const double expect = exrisk::margin_cdf(params, t);
            const double se = std::sqrt(std::max(expect * (1.0 - expect), 1e-12) /
                                        static_cast<double>(n));
            ok = std::abs(static_cast<double>(count) / static_cast<double>(n) - expect) <=
                 4.0 * se + 1e-12;
        }
        report("margin_cdf_empirical", ok, "50-point t grid, 4 binomial SE");
    }

    {
        const double amp = params.bump_amplitude();
        const double closed = exrisk::hellinger_sq(params, 0);
        const double analytic = 2.0 * params.w * (1.0 - std::sqrt(1.0 - amp * amp));
        const bool ok = std::abs(closed - analytic) < 1e-12 &&
                        closed <= 2.0 * params.w * amp * amp + 1e-15;
        std::ostringstream detail;
        detail << closed << " <= " << 2.0 * params.w * amp * amp;
        report("hellinger_closed_form_and_chain_bound", ok, detail.str());
    }

    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"excess-risk laboratory for neural network classification"};
    app.require_subcommand(1);

    std::string config_path;
    auto* sweep = app.add_subcommand("sweep", "run a seeded training/evaluation sweep");
    sweep->add_option("--config", config_path, "experiment config file")->required();

    std::string fit_input;
    double fit_alpha = 1.0;
    bool log_correction = false;
    double fit_slack = 0.1;
    auto* fit = app.add_subcommand("fit", "fit a log-log convergence exponent");
    fit->add_option("--input", fit_input, "results.csv from a sweep")->required();
    fit->add_option("--alpha", fit_alpha, "margin exponent")->required();
    fit->add_flag("--log-correction", log_correction, "divide out the (log n) factor");
    fit->add_option("--slack", fit_slack, "verdict slack around the theory exponent");

    double curves_alpha = 1.0;
    std::size_t curves_n_min = 100;
    std::size_t curves_n_max = 1000000;
    double curves_factor = 2.0;
    std::string curves_output;
    auto* curves = app.add_subcommand("curves", "emit theory rate curves as CSV");
    curves->add_option("--alpha", curves_alpha, "margin exponent")->required();
    curves->add_option("--n-min", curves_n_min, "smallest n")->required();
    curves->add_option("--n-max", curves_n_max, "largest n")->required();
    curves->add_option("--factor", curves_factor, "geometric step");
    curves->add_option("--output", curves_output, "output file (stdout when omitted)");

    std::string calib_output;
    std::size_t eta_points = 1001;
    std::size_t theta_points = 4097;
    auto* calib = app.add_subcommand("calib-table", "emit the calibration table as CSV");
    calib->add_option("--output", calib_output, "output file (stdout when omitted)");
    calib->add_option("--eta-points", eta_points, "eta grid size");
    calib->add_option("--theta-points", theta_points, "theta grid size");

    std::string dist_config;
    std::uint64_t dist_seed = 1;
    auto* dist = app.add_subcommand("dist-check", "run the distribution property suite");
    dist->add_option("--config", dist_config, "distribution config file")->required();
    dist->add_option("--seed", dist_seed, "Monte Carlo seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            return run_sweep_cmd(config_path);
        }
        if (*fit) {
            return run_fit_cmd(fit_input, fit_alpha, log_correction, fit_slack);
        }
        if (*curves) {
            return run_curves_cmd(curves_alpha, curves_n_min, curves_n_max, curves_factor,
                                  curves_output);
        }
        if (*calib) {
            return run_calib_table_cmd(calib_output, eta_points, theta_points);
        }
        if (*dist) {
            return run_dist_check_cmd(dist_config, dist_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
